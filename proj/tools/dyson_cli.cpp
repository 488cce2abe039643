// Command-line driver: kernel grids, relaxation tables, property suites,
// SDE simulation, and correlation exports, all with CSV artifacts and a JSON
// manifest per output directory.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dyson/configuration.hpp"
#include "dyson/correlations.hpp"
#include "dyson/errors.hpp"
#include "dyson/io.hpp"
#include "dyson/kernels.hpp"
#include "dyson/simulation.hpp"
#include "dyson/verify.hpp"

using namespace dyson;

namespace {

std::vector<double> parse_grid(const std::string& text) {
    double lo = 0.0, hi = 0.0, step = 0.0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3)
        throw invalid_parameter("grid must be lo:hi:step, got: " + text);
    if (!(step > 0.0) || hi < lo) throw invalid_parameter("grid needs step > 0 and hi >= lo");
    std::vector<double> v;
    for (double x = lo; x <= hi + step * 0.5; x += step) v.push_back(x);
    return v;
}

std::pair<double, double> parse_range(const std::string& text) {
    double lo = 0.0, hi = 0.0;
    if (std::sscanf(text.c_str(), "%lf:%lf", &lo, &hi) != 2 || hi <= lo)
        throw invalid_parameter("range must be lo:hi with hi > lo, got: " + text);
    return {lo, hi};
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

// key=value option file; the derived flags are inserted before the command
// line ones so explicit flags win
std::vector<std::string> load_option_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_parameter("cannot open option file: " + path);
    std::vector<std::string> args;
    std::string line;
    while (std::getline(in, line)) {
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos || line[a] == '#') continue;
        size_t b = line.find_last_not_of(" \t\r");
        std::string body = line.substr(a, b - a + 1);
        size_t eq = body.find('=');
        if (eq == std::string::npos || eq == 0)
            throw invalid_parameter("option file lines must be key=value, got: " + body);
        args.push_back("--" + body.substr(0, eq) + "=" + body.substr(eq + 1));
    }
    return args;
}

// ----- decorative SVG plots --------------------------------------------------

void svg_line(const std::string& path, const std::vector<double>& xs,
              const std::vector<double>& ys, const std::string& label) {
    const int W = 720, H = 440, M = 50;
    double xlo = xs.front(), xhi = xs.back();
    double ylo = ys[0], yhi = ys[0];
    for (double y : ys) {
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    }
    if (yhi <= ylo) yhi = ylo + 1.0;
    auto px = [&](double x) { return M + (W - 2 * M) * (x - xlo) / (xhi - xlo); };
    auto py = [&](double y) { return H - M - (H - 2 * M) * (y - ylo) / (yhi - ylo); };
    std::ofstream out(path, std::ios::binary);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='14'>" << label
        << "</text>\n<polyline fill='none' stroke='#1f6fb2' stroke-width='1.5' points='";
    for (size_t i = 0; i < xs.size(); ++i) out << px(xs[i]) << "," << py(ys[i]) << " ";
    out << "'/>\n<line x1='" << M << "' y1='" << H - M << "' x2='" << W - M << "' y2='" << H - M
        << "' stroke='black'/>\n<line x1='" << M << "' y1='" << M << "' x2='" << M << "' y2='"
        << H - M << "' stroke='black'/>\n"
        << "<text x='" << M << "' y='" << H - M + 18 << "' font-size='11'>" << xlo << "</text>\n"
        << "<text x='" << W - M << "' y='" << H - M + 18
        << "' text-anchor='end' font-size='11'>" << xhi << "</text>\n"
        << "<text x='" << M - 4 << "' y='" << H - M << "' text-anchor='end' font-size='11'>"
        << ylo << "</text>\n"
        << "<text x='" << M - 4 << "' y='" << M + 4 << "' text-anchor='end' font-size='11'>"
        << yhi << "</text>\n</svg>\n";
}

void svg_heatmap(const std::string& path, const std::vector<double>& xs,
                 const std::vector<double>& ys, const std::vector<double>& vals,
                 const std::string& label) {
    const int W = 720, H = 640, M = 50;
    double vlo = vals[0], vhi = vals[0];
    for (double v : vals) {
        vlo = std::min(vlo, v);
        vhi = std::max(vhi, v);
    }
    if (vhi <= vlo) vhi = vlo + 1.0;
    double cw = double(W - 2 * M) / double(xs.size());
    double ch = double(H - 2 * M) / double(ys.size());
    std::ofstream out(path, std::ios::binary);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
        << "<rect width='100%' height='100%' fill='white'/>\n"
        << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='14'>" << label
        << " [" << vlo << ", " << vhi << "]</text>\n";
    for (size_t i = 0; i < xs.size(); ++i)
        for (size_t j = 0; j < ys.size(); ++j) {
            double u = (vals[i * ys.size() + j] - vlo) / (vhi - vlo);
            int rr = int(255 * u), bb = int(255 * (1.0 - u));
            int gg = int(255 * (1.0 - std::abs(2 * u - 1.0)));
            out << "<rect x='" << M + cw * double(i) << "' y='"
                << H - M - ch * double(j + 1) << "' width='" << cw + 0.5 << "' height='"
                << ch + 0.5 << "' fill='rgb(" << rr << "," << gg << "," << bb << ")'/>\n";
        }
    out << "</svg>\n";
}

// ----- subcommands -----------------------------------------------------------

struct KernelArgs {
    std::string family = "sine";
    std::string config = "Z";
    double s = 0.5, t = 0.5;
    double r = 0.0, x = 0.0, y = 0.0;
    bool has_r = false, has_x = false, has_y = false;
    std::string grid;
    std::string outdir = ".";
    bool plot = false;
    double quad_tol = 1e-10;
};

int cmd_kernel(const KernelArgs& a) {
    auto t0 = std::chrono::steady_clock::now();
    KernelFamily fam = parse_family(a.family);

    if (fam == KernelFamily::sine || fam == KernelFamily::extended_sine) {
        double dr = a.has_r ? a.r : (a.has_x && a.has_y ? a.y - a.x : 0.0);
        if (!a.has_r && !(a.has_x && a.has_y))
            throw invalid_parameter("sine kernels need --r or --x/--y");
        double v = fam == KernelFamily::sine ? sine_kernel(dr)
                                             : extended_sine(a.t - a.s, dr, a.quad_tol);
        std::cout << io::fmt_double(v) << "\n";
        return 0;
    }

    KernelSpec spec;
    spec.family = fam;
    spec.config = parse_config(a.config);
    spec.tolerances.quad_tol = a.quad_tol;

    const std::vector<std::string> header{"s", "t", "x", "y", "value", "imag_residual",
                                          "est_error"};
    auto row_of = [&](double x, double y) {
        KernelValue v = eval_kernel(spec, {a.s, x}, {a.t, y});
        return std::vector<std::string>{io::fmt_double(a.s),     io::fmt_double(a.t),
                                        io::fmt_double(x),       io::fmt_double(y),
                                        io::fmt_double(v.value), io::fmt_double(v.imag_residual),
                                        io::fmt_double(v.est_error)};
    };

    if (a.has_x && a.has_y && a.grid.empty()) {
        KernelValue v = eval_kernel(spec, {a.s, a.x}, {a.t, a.y});
        std::cout << io::fmt_double(v.value) << "\n";
        return 0;
    }

    std::filesystem::create_directories(a.outdir);
    std::string csv = join_path(a.outdir, "kernel.csv");
    io::CsvWriter w(csv);
    w.row(header);
    std::vector<std::string> outputs{csv};

    if (!a.grid.empty() && !(a.has_x || a.has_y)) {
        std::vector<double> g = parse_grid(a.grid);
        std::vector<double> vals(g.size() * g.size());
        for (size_t i = 0; i < g.size(); ++i)
            for (size_t j = 0; j < g.size(); ++j) {
                std::vector<std::string> row = row_of(g[i], g[j]);
                vals[i * g.size() + j] = std::stod(row[4]);
                w.row(row);
            }
        if (a.plot) {
            std::string svg = join_path(a.outdir, "kernel.svg");
            svg_heatmap(svg, g, g, vals, "K(s,x;t,y), " + a.family);
            outputs.push_back(svg);
        }
    } else {
        // diagonal: density profile K(s,x;t,x)
        std::vector<double> g = parse_grid(a.grid.empty() ? "-4:4:0.05" : a.grid);
        std::vector<double> vals;
        for (double x : g) {
            std::vector<std::string> row = row_of(x, x);
            vals.push_back(std::stod(row[4]));
            w.row(row);
        }
        if (a.plot) {
            std::string svg = join_path(a.outdir, "kernel.svg");
            svg_line(svg, g, vals, "K(s,x;t,x), " + a.family);
            outputs.push_back(svg);
        }
    }
    w.close();

    io::RunManifest m;
    m.experiment = "kernel";
    m.params = {{"family", a.family}, {"config", a.config},     {"s", a.s},
                {"t", a.t},           {"grid", a.grid},         {"quad_tol", a.quad_tol},
                {"outdir", a.outdir}, {"version", DYSON_VERSION}};
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.output_files = outputs;
    io::write_manifest(join_path(a.outdir, "manifest.json"), m);
    return 0;
}

struct RelaxArgs {
    std::vector<double> u{1.0, 2.0, 4.0, 8.0};
    double s = 0.5, t = 0.5;
    std::string grid = "-1:1:0.5";
    std::string outdir = ".";
    bool plot = false;
};

int cmd_relaxation(const RelaxArgs& a) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<double> g = parse_grid(a.grid);
    std::filesystem::create_directories(a.outdir);
    std::string csv = join_path(a.outdir, "relaxation.csv");
    io::CsvWriter w(csv);
    w.row({"u", "gap", "bound"});
    std::printf("%10s %14s %14s\n", "u", "gap", "bound");
    std::vector<double> lu, lg;
    for (double u : a.u) {
        double gap = relaxation_gap(u, a.s, a.t, g, g, 1e-10);
        double bound = relaxation_bound(u, a.s, a.t);
        w.row({io::fmt_double(u), io::fmt_double(gap), io::fmt_double(bound)});
        std::printf("%10.4g %14.6e %14.6e\n", u, gap, bound);
        lu.push_back(std::log10(u));
        lg.push_back(std::log10(std::max(gap, 1e-300)));
    }
    w.close();
    std::vector<std::string> outputs{csv};
    if (a.plot) {
        std::string svg = join_path(a.outdir, "relaxation.svg");
        svg_line(svg, lu, lg, "log10 gap vs log10 u");
        outputs.push_back(svg);
    }
    io::RunManifest m;
    m.experiment = "relaxation";
    m.params = {{"u", a.u}, {"s", a.s}, {"t", a.t}, {"grid", a.grid}};
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.output_files = outputs;
    io::write_manifest(join_path(a.outdir, "manifest.json"), m);
    return 0;
}

int cmd_verify(const std::string& suite) {
    std::vector<int> ids;
    if (suite == "all") {
        for (int i = 1; i <= 13; ++i) ids.push_back(i);
    } else {
        auto it = verify::suites().find(suite);
        if (it == verify::suites().end()) {
            int n = std::atoi(suite.c_str());
            if (n >= 1 && n <= 13) {
                ids.push_back(n);
            } else {
                std::string known = "all";
                for (const auto& kv : verify::suites()) known += ", " + kv.first;
                throw invalid_parameter("unknown suite '" + suite + "' (known: " + known + ")");
            }
        } else {
            ids = it->second;
        }
    }
    bool all_pass = true;
    for (int id : ids) {
        verify::CheckResult r = verify::run_criterion(id);
        all_pass = all_pass && r.pass;
        std::printf("[%s] %2d %-30s (%7.2f s) %s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.seconds, r.detail.c_str());
        std::fflush(stdout);
    }
    return all_pass ? 0 : 1;
}

struct SimArgs {
    std::string config = "points:-0.5^1,0.5^1";
    double dt = 1e-3;
    long long paths = 1000;
    uint64_t seed = 1;
    std::vector<double> snapshots{0.25, 0.5};
    double gmin = 1e-4;
    int threads = 0;
    int bins = 40;
    std::string range = "-2.8:2.8";
    std::string outdir = ".";
    bool plot = false;
    bool no_snapshots = false;
};

int cmd_simulate(const SimArgs& a) {
    auto t0 = std::chrono::steady_clock::now();
    SimPlan plan;
    plan.initial = parse_config(a.config);
    plan.dt = a.dt;
    plan.t_snapshots = a.snapshots;
    plan.n_paths = a.paths;
    plan.seed = a.seed;
    plan.g_min = a.gmin;
    plan.threads = a.threads;
    SimResult r = simulate(plan);

    std::filesystem::create_directories(a.outdir);
    std::vector<std::string> outputs;

    if (!a.no_snapshots) {
        std::string snap_csv = join_path(a.outdir, "snapshots.csv");
        io::CsvWriter w(snap_csv);
        std::vector<std::string> head{"path", "time"};
        for (int j = 0; j < r.n; ++j) head.push_back("x" + std::to_string(j + 1));
        w.row(head);
        for (size_t si = 0; si < r.times.size(); ++si)
            for (long long p = 0; p < r.n_paths; ++p) {
                std::vector<std::string> row{std::to_string(p), io::fmt_double(r.times[si])};
                for (int j = 0; j < r.n; ++j)
                    row.push_back(io::fmt_double(r.snaps[si][size_t(p) * size_t(r.n) + size_t(j)]));
                w.row(row);
            }
        w.close();
        outputs.push_back(snap_csv);
    }

    auto [lo, hi] = parse_range(a.range);
    std::vector<double> edges(size_t(a.bins) + 1);
    for (int i = 0; i <= a.bins; ++i) edges[size_t(i)] = lo + (hi - lo) * i / a.bins;
    std::vector<double> last_density;
    for (double t : r.times) {
        EmpiricalField f = estimate_density(r, t, edges);
        char name[64];
        std::snprintf(name, sizeof name, "density_t%g.csv", t);
        std::string csv = join_path(a.outdir, name);
        io::CsvWriter w(csv);
        w.row({"bin_lo", "bin_hi", "count", "density", "se"});
        for (size_t b = 0; b + 1 < edges.size(); ++b)
            w.row({io::fmt_double(edges[b]), io::fmt_double(edges[b + 1]),
                   std::to_string(f.counts[b]), io::fmt_double(f.density[b]),
                   io::fmt_double(f.se[b])});
        w.close();
        outputs.push_back(csv);
        last_density = f.density;
    }
    if (a.plot && !last_density.empty()) {
        std::vector<double> mids;
        for (size_t b = 0; b + 1 < edges.size(); ++b) mids.push_back(0.5 * (edges[b] + edges[b + 1]));
        std::string svg = join_path(a.outdir, "density.svg");
        svg_line(svg, mids, last_density, "empirical density, last snapshot");
        outputs.push_back(svg);
    }

    io::RunManifest m;
    m.experiment = "simulate";
    m.params = {{"config", a.config},   {"dt", a.dt},
                {"paths", a.paths},     {"snapshots", a.snapshots},
                {"g_min", a.gmin},      {"threads", a.threads},
                {"bins", a.bins},       {"range", a.range},
                {"prng", prng_name()},  {"start", r.start}};
    m.seed = a.seed;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.output_files = outputs;
    io::write_manifest(join_path(a.outdir, "manifest.json"), m);
    return 0;
}

struct CorrArgs {
    std::string kind = "rho1";
    std::string family = "finite_residue";
    std::string config = "points:-0.5^1,0.5^1";
    double t = 0.5, t1 = 0.25, t2 = 0.5;
    std::string grid = "-2:2:0.1";
    std::string outdir = ".";
    bool plot = false;
};

int cmd_correlate(const CorrArgs& a) {
    auto t0 = std::chrono::steady_clock::now();
    KernelSpec spec;
    spec.family = parse_family(a.family);
    spec.config = parse_config(a.config);
    std::vector<double> g = parse_grid(a.grid);

    std::filesystem::create_directories(a.outdir);
    std::string csv = join_path(a.outdir, "correlate.csv");
    io::CsvWriter w(csv);
    std::vector<std::string> outputs{csv};
    std::vector<double> vals;

    if (a.kind == "rho1") {
        w.row({"t", "x", "rho1"});
        for (double x : g) {
            double v = rho1(spec, a.t, x);
            vals.push_back(v);
            w.row({io::fmt_double(a.t), io::fmt_double(x), io::fmt_double(v)});
        }
        if (a.plot) {
            std::string svg = join_path(a.outdir, "correlate.svg");
            svg_line(svg, g, vals, "rho1(t,x)");
            outputs.push_back(svg);
        }
    } else if (a.kind == "rho2") {
        w.row({"t", "x", "y", "rho2"});
        for (double x : g)
            for (double y : g) {
                double v = rho2(spec, a.t, x, y);
                vals.push_back(v);
                w.row({io::fmt_double(a.t), io::fmt_double(x), io::fmt_double(y),
                       io::fmt_double(v)});
            }
        if (a.plot) {
            std::string svg = join_path(a.outdir, "correlate.svg");
            svg_heatmap(svg, g, g, vals, "rho2(t,x,y)");
            outputs.push_back(svg);
        }
    } else if (a.kind == "two-time") {
        w.row({"t1", "x", "t2", "y", "value"});
        for (double x : g)
            for (double y : g) {
                double v = rho_two_time(spec, a.t1, x, a.t2, y);
                vals.push_back(v);
                w.row({io::fmt_double(a.t1), io::fmt_double(x), io::fmt_double(a.t2),
                       io::fmt_double(y), io::fmt_double(v)});
            }
        if (a.plot) {
            std::string svg = join_path(a.outdir, "correlate.svg");
            svg_heatmap(svg, g, g, vals, "rho(t1,x;t2,y)");
            outputs.push_back(svg);
        }
    } else {
        throw invalid_parameter("correlate kind must be rho1, rho2, or two-time");
    }
    w.close();

    io::RunManifest m;
    m.experiment = "correlate";
    m.params = {{"kind", a.kind}, {"family", a.family}, {"config", a.config},
                {"t", a.t},       {"t1", a.t1},         {"t2", a.t2},
                {"grid", a.grid}};
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.output_files = outputs;
    io::write_manifest(join_path(a.outdir, "manifest.json"), m);
    return 0;
}

// let "--flag -2:2:0.05" survive CLI11's option-vs-value classification
std::vector<std::string> normalize_args(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a.rfind("--", 0) == 0 && a.find('=') == std::string::npos && i + 1 < argc) {
            std::string next = argv[i + 1];
            if (next.size() > 1 && next[0] == '-' &&
                (std::isdigit(next[1]) || next[1] == '.')) {
                args.push_back(a + "=" + next);
                ++i;
                continue;
            }
        }
        args.push_back(a);
    }
    return args;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"space-time correlation kernels of noncolliding Brownian motion"};
    app.require_subcommand(1);

    KernelArgs ka;
    RelaxArgs ra;
    SimArgs sa;
    CorrArgs ca;
    std::string suite = "all";
    std::string option_file;

    CLI::App* kernel = app.add_subcommand("kernel", "evaluate a kernel on points or grids");
    kernel->add_option("--family", ka.family, "kernel family")->capture_default_str();
    kernel->add_option("--config", ka.config, "initial configuration literal")
        ->capture_default_str();
    kernel->add_option("--s", ka.s, "first time")->capture_default_str();
    kernel->add_option("--t", ka.t, "second time")->capture_default_str();
    kernel->add_option("--r", ka.r, "spatial separation (sine families)");
    kernel->add_option("--x", ka.x, "first coordinate");
    kernel->add_option("--y", ka.y, "second coordinate");
    kernel->add_option("--grid", ka.grid, "lo:hi:step evaluation grid");
    kernel->add_option("--outdir", ka.outdir, "output directory")->capture_default_str();
    kernel->add_option("--quad-tol", ka.quad_tol, "quadrature tolerance")->capture_default_str();
    kernel->add_flag("--plot", ka.plot, "also write an SVG plot");
    kernel->add_option("--options", option_file, "key=value option file");

    CLI::App* relax = app.add_subcommand("relaxation", "gap to the stationary kernel");
    relax->add_option("--u", ra.u, "elapsed times")->capture_default_str();
    relax->add_option("--s", ra.s, "first time offset")->capture_default_str();
    relax->add_option("--t", ra.t, "second time offset")->capture_default_str();
    relax->add_option("--grid", ra.grid, "lo:hi:step supremum grid")->capture_default_str();
    relax->add_option("--outdir", ra.outdir, "output directory")->capture_default_str();
    relax->add_flag("--plot", ra.plot, "also write an SVG decay plot");
    relax->add_option("--options", option_file, "key=value option file");

    CLI::App* ver = app.add_subcommand("verify", "run a property suite");
    ver->add_option("suite", suite,
                    "suite name (biorth, det-lemma, intertwine, forms-agree, theta, cluster, "
                    "mc-n2, conditions), a criterion number, or 'all'")
        ->capture_default_str();

    CLI::App* sim = app.add_subcommand("simulate", "Euler-Maruyama paths of the SDE");
    sim->add_option("--config", sa.config, "initial configuration literal")
        ->capture_default_str();
    sim->add_option("--dt", sa.dt, "base step")->capture_default_str();
    sim->add_option("--paths", sa.paths, "number of paths")->capture_default_str();
    sim->add_option("--seed", sa.seed, "RNG seed")->capture_default_str();
    sim->add_option("--snapshots", sa.snapshots, "snapshot times")->capture_default_str();
    sim->add_option("--gmin", sa.gmin, "collision guard")->capture_default_str();
    sim->add_option("--threads", sa.threads, "worker cap (0 = auto)")->capture_default_str();
    sim->add_option("--bins", sa.bins, "histogram bins")->capture_default_str();
    sim->add_option("--range", sa.range, "histogram range lo:hi")->capture_default_str();
    sim->add_option("--outdir", sa.outdir, "output directory")->capture_default_str();
    sim->add_flag("--plot", sa.plot, "also write an SVG density plot");
    sim->add_flag("--no-snapshots", sa.no_snapshots, "skip the per-path snapshot CSV");
    sim->add_option("--options", option_file, "key=value option file");

    CLI::App* corr = app.add_subcommand("correlate", "correlation functions on grids");
    corr->add_option("--kind", ca.kind, "rho1 | rho2 | two-time")->capture_default_str();
    corr->add_option("--family", ca.family, "kernel family")->capture_default_str();
    corr->add_option("--config", ca.config, "initial configuration literal")
        ->capture_default_str();
    corr->add_option("--t", ca.t, "time (rho1/rho2)")->capture_default_str();
    corr->add_option("--t1", ca.t1, "first time (two-time)")->capture_default_str();
    corr->add_option("--t2", ca.t2, "second time (two-time)")->capture_default_str();
    corr->add_option("--grid", ca.grid, "lo:hi:step grid")->capture_default_str();
    corr->add_option("--outdir", ca.outdir, "output directory")->capture_default_str();
    corr->add_flag("--plot", ca.plot, "also write an SVG plot");
    corr->add_option("--options", option_file, "key=value option file");

    std::vector<std::string> args = normalize_args(argc, argv);
    // expand a key=value option file into flags ahead of the explicit ones
    for (size_t i = 0; i < args.size(); ++i) {
        std::string pfx = "--options=";
        std::string path;
        if (args[i].rfind(pfx, 0) == 0) {
            path = args[i].substr(pfx.size());
        } else if (args[i] == "--options" && i + 1 < args.size()) {
            path = args[i + 1];
        }
        if (!path.empty() && !args.empty()) {
            try {
                std::vector<std::string> extra = load_option_file(path);
                // explicit flags override the file: drop file keys that also
                // appear on the command line
                std::vector<std::string> kept;
                for (const std::string& tok : extra) {
                    std::string key = tok.substr(0, tok.find('='));
                    bool shadowed = false;
                    for (const std::string& given : args)
                        if (given == key || given.rfind(key + "=", 0) == 0) shadowed = true;
                    if (!shadowed) kept.push_back(tok);
                }
                args.insert(args.begin() + 1, kept.begin(), kept.end());
            } catch (const error& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
            break;
        }
    }
    std::vector<const char*> cargs{argv[0]};
    for (const std::string& s : args) cargs.push_back(s.c_str());

    try {
        app.parse(int(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    ka.has_r = kernel->count("--r") > 0;
    ka.has_x = kernel->count("--x") > 0;
    ka.has_y = kernel->count("--y") > 0;

    try {
        if (app.got_subcommand(kernel)) return cmd_kernel(ka);
        if (app.got_subcommand(relax)) return cmd_relaxation(ra);
        if (app.got_subcommand(ver)) return cmd_verify(suite);
        if (app.got_subcommand(sim)) return cmd_simulate(sa);
        if (app.got_subcommand(corr)) return cmd_correlate(ca);
    } catch (const invalid_parameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const precondition_violation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const unsupported& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_failure& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
