#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dyson/errors.hpp"

namespace dyson {

struct Atom {
    double x = 0.0;
    int mult = 1;
};

inline double g_kappa(double kappa, double v) {
    if (v == 0.0) return 0.0;
    if (kappa == 1.0) return v;
    return v > 0.0 ? std::pow(v, kappa) : -std::pow(-v, kappa);
}

inline double g_kappa_inv(double kappa, double y) {
    if (y == 0.0) return 0.0;
    if (kappa == 1.0) return y;
    return y > 0.0 ? std::pow(y, 1.0 / kappa) : -std::pow(-y, 1.0 / kappa);
}

// Lazily evaluated infinite part: l -> scale*g^kappa(l)+offset, optionally
// squared and post-transformed.  kappa=1, scale=1, offset=0 is the integer
// lattice; offset-free kappa<1 is the stretched lattice.
struct TailRule {
    double kappa = 1.0;
    double scale = 1.0;
    double offset = 0.0;
    bool is_squared = false;
    double post_scale = 1.0;
    double post_offset = 0.0;

    double base_at(long long l) const { return scale * g_kappa(kappa, double(l)) + offset; }

    double point_at(long long l) const {
        double b = base_at(l);
        if (!is_squared) return b;
        return post_scale * b * b + post_offset;
    }

    bool odd_symmetric() const { return !is_squared && offset == 0.0; }
};

class Configuration {
public:
    Configuration() = default;

    static Configuration finite(std::vector<Atom> atoms) {
        Configuration c;
        c.added_ = std::move(atoms);
        c.normalize();
        return c;
    }

    static Configuration from_rule(TailRule r) {
        if (!(r.scale > 0.0)) throw invalid_parameter("tail rule needs scale > 0");
        if (!(r.kappa > 0.0)) throw invalid_parameter("tail rule needs kappa > 0");
        Configuration c;
        c.tail_ = r;
        return c;
    }

    static Configuration lattice() { return from_rule(TailRule{}); }

    static Configuration stretched_lattice(double kappa) {
        TailRule r;
        r.kappa = kappa;
        return from_rule(r);
    }

    bool is_finite() const { return !tail_.has_value(); }
    bool has_tail() const { return tail_.has_value(); }
    const TailRule& tail() const {
        if (!tail_) throw precondition_violation("configuration has no tail rule");
        return *tail_;
    }
    const std::vector<Atom>& added() const { return added_; }
    const std::vector<Atom>& removed() const { return removed_; }

    // merged atoms with positions in [lo, hi], sorted, multiplicities summed
    std::vector<Atom> window(double lo, double hi) const {
        std::vector<Atom> out;
        if (hi < lo) return out;
        if (tail_) enumerate_tail(lo, hi, out);
        for (const Atom& a : added_)
            if (a.x >= lo && a.x <= hi) out.push_back(a);
        std::sort(out.begin(), out.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
        merge_equal(out);
        for (const Atom& r : removed_) {
            if (r.x < lo || r.x > hi) continue;
            auto it = std::lower_bound(out.begin(), out.end(), r.x,
                                       [](const Atom& a, double v) { return a.x < v; });
            if (it == out.end() || it->x != r.x || it->mult < r.mult)
                throw precondition_violation("removed point not present in configuration");
            it->mult -= r.mult;
            if (it->mult == 0) out.erase(it);
        }
        return out;
    }

    long long count_closed(double lo, double hi) const {
        long long n = 0;
        for (const Atom& a : window(lo, hi)) n += a.mult;
        return n;
    }

    long long count_open(double lo, double hi) const {
        long long n = 0;
        for (const Atom& a : window(lo, hi))
            if (a.x > lo && a.x < hi) n += a.mult;
        return n;
    }

    int multiplicity_at(double x) const {
        int n = 0;
        for (const Atom& a : window(x, x))
            if (a.x == x) n += a.mult;
        return n;
    }

    long long total_count() const {
        if (tail_) throw precondition_violation("infinite configuration has no total count");
        long long n = 0;
        for (const Atom& a : added_) n += a.mult;
        for (const Atom& a : removed_) n -= a.mult;
        return n;
    }

    // multiplicity-expanded sorted positions (finite only)
    std::vector<double> expanded() const {
        if (tail_) throw precondition_violation("cannot expand infinite configuration");
        std::vector<double> xs;
        for (const Atom& a : window(support_min(), support_max()))
            for (int i = 0; i < a.mult; ++i) xs.push_back(a.x);
        return xs;
    }

    std::vector<Atom> atoms() const {
        if (tail_) throw precondition_violation("infinite configuration; use window()");
        if (added_.empty() && removed_.empty()) return {};
        return window(support_min(), support_max());
    }

    double support_min() const {
        if (tail_) throw precondition_violation("infinite support");
        double m = std::numeric_limits<double>::infinity();
        for (const Atom& a : added_) m = std::min(m, a.x);
        return m;
    }

    double support_max() const {
        if (tail_) throw precondition_violation("infinite support");
        double m = -std::numeric_limits<double>::infinity();
        for (const Atom& a : added_) m = std::max(m, a.x);
        return m;
    }

    bool simple(double probe_half_width = 1000.0) const {
        double lo = -probe_half_width, hi = probe_half_width;
        if (!tail_) {
            if (added_.empty()) return true;
            lo = support_min();
            hi = support_max();
        }
        for (const Atom& a : window(lo, hi))
            if (a.mult != 1) return false;
        return true;
    }

    Configuration shifted(double u) const {
        Configuration c = *this;
        for (Atom& a : c.added_) a.x += u;
        for (Atom& a : c.removed_) a.x += u;
        if (c.tail_) {
            if (c.tail_->is_squared)
                c.tail_->post_offset += u;
            else
                c.tail_->offset += u;
        }
        c.normalize();
        return c;
    }

    Configuration dilated(double factor) const {
        if (!(factor > 0.0)) throw invalid_parameter("dilate needs c > 0");
        Configuration c = *this;
        for (Atom& a : c.added_) a.x *= factor;
        for (Atom& a : c.removed_) a.x *= factor;
        if (c.tail_) {
            if (c.tail_->is_squared) {
                c.tail_->post_scale *= factor;
                c.tail_->post_offset *= factor;
            } else {
                c.tail_->scale *= factor;
                c.tail_->offset *= factor;
            }
        }
        c.normalize();
        return c;
    }

    Configuration squared_config() const {
        Configuration c = *this;
        if (c.tail_) {
            if (c.tail_->is_squared)
                throw unsupported("square of an already squared infinite configuration");
            c.tail_->is_squared = true;
            c.tail_->post_scale = 1.0;
            c.tail_->post_offset = 0.0;
        }
        for (Atom& a : c.added_) a.x = a.x * a.x;
        for (Atom& a : c.removed_) a.x = a.x * a.x;
        c.normalize();
        return c;
    }

    // finite restriction to [lo, hi]
    Configuration restricted(double lo, double hi) const {
        return Configuration::finite(window(lo, hi));
    }

    // remove specific atoms (cluster subtraction)
    Configuration without(const std::vector<Atom>& pts) const {
        Configuration c = *this;
        for (const Atom& p : pts) {
            if (multiplicity_at(p.x) < p.mult)
                throw invalid_parameter("cannot remove absent point");
            c.removed_.push_back(p);
        }
        c.normalize();
        return c;
    }

private:
    std::vector<Atom> added_;
    std::vector<Atom> removed_;
    std::optional<TailRule> tail_;

    static void merge_equal(std::vector<Atom>& v) {
        std::vector<Atom> out;
        for (const Atom& a : v) {
            if (a.mult < 1) throw invalid_parameter("multiplicity must be >= 1");
            if (!out.empty() && out.back().x == a.x)
                out.back().mult += a.mult;
            else
                out.push_back(a);
        }
        v = std::move(out);
    }

    void normalize() {
        auto byx = [](const Atom& a, const Atom& b) { return a.x < b.x; };
        std::sort(added_.begin(), added_.end(), byx);
        merge_equal(added_);
        std::sort(removed_.begin(), removed_.end(), byx);
        merge_equal(removed_);
    }

    void enumerate_tail(double lo, double hi, std::vector<Atom>& out) const {
        const TailRule& t = *tail_;
        long long llo, lhi;
        if (!t.is_squared) {
            double glo = (lo - t.offset) / t.scale;
            double ghi = (hi - t.offset) / t.scale;
            llo = (long long)std::floor(g_kappa_inv(t.kappa, glo)) - 2;
            lhi = (long long)std::ceil(g_kappa_inv(t.kappa, ghi)) + 2;
        } else {
            double s2 = (hi - t.post_offset) / t.post_scale;
            if (s2 < 0.0) return;
            double r = std::sqrt(s2);
            double glo = (-r - t.offset) / t.scale;
            double ghi = (r - t.offset) / t.scale;
            llo = (long long)std::floor(g_kappa_inv(t.kappa, glo)) - 2;
            lhi = (long long)std::ceil(g_kappa_inv(t.kappa, ghi)) + 2;
        }
        if (lhi - llo > 20'000'000LL)
            throw truncation_failure("window would materialize too many lattice points");
        for (long long l = llo; l <= lhi; ++l) {
            double v = t.point_at(l);
            if (v >= lo && v <= hi) out.push_back({v, 1});
        }
    }
};

// spec-facing operation names
inline Configuration shift(const Configuration& xi, double u) { return xi.shifted(u); }
inline Configuration dilate(const Configuration& xi, double c) { return xi.dilated(c); }
inline Configuration square(const Configuration& xi) { return xi.squared_config(); }

// ----- literals -----------------------------------------------------------
//
//   "Z"                       integer lattice
//   "eta:<kappa>"             stretched lattice g^kappa(l)
//   "points:x1^m1,x2^m2,..."  finite multiset (multiplicity defaults to 1)
// optional transform suffixes, applied left to right:
//   "|shift:<u>" "|dilate:<c>" "|square"

namespace detail {

inline double parse_real(const std::string& s) {
    if (s.empty()) throw invalid_parameter("empty number in configuration literal");
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v))
        throw invalid_parameter("bad number in configuration literal: " + s);
    return v;
}

inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline Configuration parse_config(const std::string& text) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        size_t bar = text.find('|', start);
        parts.push_back(text.substr(start, bar == std::string::npos ? bar : bar - start));
        if (bar == std::string::npos) break;
        start = bar + 1;
    }
    const std::string& base = parts[0];
    Configuration cfg;
    if (base == "Z") {
        cfg = Configuration::lattice();
    } else if (base.rfind("eta:", 0) == 0) {
        double kappa = detail::parse_real(base.substr(4));
        if (!(kappa > 0.0)) throw invalid_parameter("eta needs kappa > 0");
        cfg = Configuration::stretched_lattice(kappa);
    } else if (base.rfind("points:", 0) == 0) {
        std::vector<Atom> atoms;
        std::string body = base.substr(7);
        size_t pos = 0;
        while (pos <= body.size() && !body.empty()) {
            size_t comma = body.find(',', pos);
            std::string item = body.substr(pos, comma == std::string::npos ? comma : comma - pos);
            size_t caret = item.find('^');
            Atom a;
            if (caret == std::string::npos) {
                a.x = detail::parse_real(item);
                a.mult = 1;
            } else {
                a.x = detail::parse_real(item.substr(0, caret));
                double m = detail::parse_real(item.substr(caret + 1));
                a.mult = int(m);
                if (a.mult < 1 || double(a.mult) != m)
                    throw invalid_parameter("multiplicity must be a positive integer");
            }
            atoms.push_back(a);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        cfg = Configuration::finite(std::move(atoms));
    } else {
        throw invalid_parameter("unknown configuration literal: " + base);
    }
    for (size_t i = 1; i < parts.size(); ++i) {
        const std::string& op = parts[i];
        if (op.rfind("shift:", 0) == 0)
            cfg = cfg.shifted(detail::parse_real(op.substr(6)));
        else if (op.rfind("dilate:", 0) == 0)
            cfg = cfg.dilated(detail::parse_real(op.substr(7)));
        else if (op == "square")
            cfg = cfg.squared_config();
        else
            throw invalid_parameter("unknown configuration transform: " + op);
    }
    return cfg;
}

inline std::string format_config(const Configuration& cfg) {
    if (cfg.is_finite()) {
        std::string s = "points:";
        bool first = true;
        for (const Atom& a : cfg.atoms()) {
            if (!first) s += ',';
            first = false;
            s += detail::fmt_real(a.x) + "^" + std::to_string(a.mult);
        }
        return s;
    }
    const TailRule& t = cfg.tail();
    std::string s = (t.kappa == 1.0) ? "Z" : "eta:" + detail::fmt_real(t.kappa);
    if (t.scale != 1.0) s += "|dilate:" + detail::fmt_real(t.scale);
    if (t.offset != 0.0) s += "|shift:" + detail::fmt_real(t.offset);
    if (t.is_squared) {
        s += "|square";
        if (t.post_scale != 1.0) s += "|dilate:" + detail::fmt_real(t.post_scale);
        if (t.post_offset != 0.0) s += "|shift:" + detail::fmt_real(t.post_offset);
    }
    if (!cfg.added().empty() || !cfg.removed().empty())
        throw unsupported("cannot format infinite configuration with point edits");
    return s;
}

// ----- principal-value and moment sums ------------------------------------

// M(xi, L): sum of mult/x over 0 < |x| <= L, exact cancellation of +-pairs
inline double m_signed(const Configuration& xi, double L) {
    auto w = xi.window(-L, L);
    double s = 0.0;
    int i = 0, j = int(w.size()) - 1;
    while (i <= j) {
        if (w[i].x == 0.0) {
            ++i;
            continue;
        }
        if (i == j) {
            s += double(w[i].mult) / w[i].x;
            break;
        }
        if (w[i].x > 0.0) {
            for (; i <= j; ++i) s += double(w[i].mult) / w[i].x;
            break;
        }
        if (w[j].x < 0.0) {
            for (; j >= i; --j) s += double(w[j].mult) / w[j].x;
            break;
        }
        double a = -w[i].x, b = w[j].x;
        if (a == b) {
            if (w[i].mult != w[j].mult) s += double(w[j].mult - w[i].mult) / b;
            ++i;
            --j;
        } else if (a > b) {
            s += double(w[i].mult) / w[i].x;
            ++i;
        } else {
            s += double(w[j].mult) / w[j].x;
            --j;
        }
    }
    return s;
}

// M_alpha(xi, L) = (sum mult |x|^-alpha over 0 < |x| <= L)^(1/alpha)
inline double m_alpha(const Configuration& xi, double L, double alpha) {
    if (!(alpha > 0.0)) throw invalid_parameter("m_alpha needs alpha > 0");
    double s = 0.0;
    for (const Atom& a : xi.window(-L, L)) {
        if (a.x == 0.0) continue;
        s += a.mult * std::pow(std::abs(a.x), -alpha);
    }
    return std::pow(s, 1.0 / alpha);
}

// ----- condition checks ----------------------------------------------------

struct ConditionReport {
    double m_signed = 0.0;  // M(xi, L_max)
    double m_alpha = 0.0;   // M_alpha(xi, L_max)
    bool c1_holds = false;
    bool c2i_holds = false;
    bool c2ii_holds = false;
    bool c3_holds = false;
    double C0 = 0.0;        // witnessed sup |M(xi, L)| over the L grid
    double C1 = 0.0;        // witnessed M_alpha
    double alpha = 0.0;
    double C2 = 0.0;        // witnessed sup f(a) (|a| v 1)^beta
    double beta_exp = 0.0;  // fitted decay exponent of f(a)
    double kappa = 0.0;
    int m = 0;              // witnessed m(xi, kappa)
};

namespace detail {

// M_1 of tau_{-a^2} xi^<2>: sum mult/|x^2-a^2| over the window, points at
// x^2 = a^2 excluded, one-term integral tail for lattice rules
inline double squared_shift_m1(const Configuration& xi, double a, double window_halfwidth) {
    double X = std::max(window_halfwidth, 2.0 * std::abs(a) + 10.0);
    double s = 0.0;
    for (const Atom& at : xi.window(-X, X)) {
        double d = at.x * at.x - a * a;
        if (d == 0.0) continue;
        s += at.mult / std::abs(d);
    }
    if (xi.has_tail() && !xi.tail().is_squared) {
        const TailRule& t = xi.tail();
        double lX = std::abs(g_kappa_inv(t.kappa, (X - t.offset) / t.scale));
        double p = 2.0 * t.kappa;
        if (p > 1.0 && lX > 1.0)
            s += 2.0 * std::pow(lX, 1.0 - p) / (t.scale * t.scale * (p - 1.0));
    }
    return s;
}

} // namespace detail

inline int cell_count(const Configuration& xi, double kappa, long long k) {
    double lo = g_kappa(kappa, double(k));
    double hi = g_kappa(kappa, double(k + 1));
    return int(xi.count_closed(lo, hi));
}

inline ConditionReport check_conditions(const Configuration& xi, double L_max, double alpha,
                                        double kappa) {
    if (!(L_max > 1.0)) throw invalid_parameter("check_conditions needs L_max > 1");
    ConditionReport rep;
    rep.alpha = alpha;
    rep.kappa = kappa;

    std::vector<double> Ls;
    for (double L = L_max; L >= 2.0 && Ls.size() < 6; L /= 2.0) Ls.push_back(L);
    std::reverse(Ls.begin(), Ls.end());

    // C.1
    std::vector<double> Ms;
    for (double L : Ls) Ms.push_back(m_signed(xi, L));
    rep.m_signed = Ms.back();
    for (double v : Ms) rep.C0 = std::max(rep.C0, std::abs(v));
    double mdrift = Ms.size() >= 2 ? std::abs(Ms.back() - Ms[Ms.size() - 2]) : 0.0;
    rep.c1_holds = std::isfinite(rep.m_signed) && mdrift <= std::max(0.05, 0.02 * rep.C0);

    // C.2 (i): boundedness is certified by contraction of the raw-sum
    // increments along the doubling grid.  A power tail L^-p gives increment
    // ratio 2^-p < 1; ratio >= ~1 means log divergence or worse.
    std::vector<double> Ss;
    for (double L : Ls) Ss.push_back(std::pow(m_alpha(xi, L, alpha), alpha));
    double S_full = Ss.back();
    rep.m_alpha = std::pow(S_full, 1.0 / alpha);
    bool contracting = std::isfinite(S_full);
    double tail_bound = 0.0;
    if (Ss.size() >= 3) {
        double d_prev = Ss[Ss.size() - 2] - Ss[Ss.size() - 3];
        double d_last = Ss.back() - Ss[Ss.size() - 2];
        if (d_last < -1e-12 * std::max(1.0, S_full)) contracting = false;
        if (d_last > 1e-12 * std::max(1.0, S_full)) {
            double ratio = d_prev > 0.0 ? d_last / d_prev : 1.0;
            if (!(ratio <= 0.95)) contracting = false;
            if (contracting) tail_bound = d_last * ratio / (1.0 - ratio);
        }
    }
    rep.C1 = std::pow(S_full + tail_bound, 1.0 / alpha);
    rep.c2i_holds = alpha > 1.0 && alpha < 2.0 && contracting;

    // C.2 (ii): decay of M_1(tau_{-a^2} xi^<2>) along the support
    {
        double A = std::min(L_max, 64.0);
        auto supp = xi.window(-A, A);
        std::vector<double> as;
        size_t step = std::max<size_t>(1, supp.size() / 24);
        for (size_t i = 0; i < supp.size(); i += step) as.push_back(supp[i].x);
        if (!supp.empty()) as.push_back(supp.back().x);

        double lw = std::max(200.0, 2.0 * A);
        bool all_finite = !as.empty();
        std::vector<std::pair<double, double>> fit;  // (log(|a| v 1), log f)
        for (double a : as) {
            double f = detail::squared_shift_m1(xi, a, lw);
            if (!std::isfinite(f)) {
                all_finite = false;
                continue;
            }
            if (std::abs(a) >= 2.0 && f > 0.0)
                fit.emplace_back(std::log(std::abs(a)), std::log(f));
        }
        if (xi.is_finite()) {
            rep.c2ii_holds = all_finite;
            rep.beta_exp = 0.0;
        } else if (fit.size() >= 3) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (auto& p : fit) {
                sx += p.first;
                sy += p.second;
                sxx += p.first * p.first;
                sxy += p.first * p.second;
            }
            double n = double(fit.size());
            double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            rep.beta_exp = std::max(0.0, -slope);
            rep.c2ii_holds = all_finite && rep.beta_exp > 0.01;
        } else {
            rep.c2ii_holds = false;
        }
        // recompute the witnessed constant with the fitted exponent
        rep.C2 = 0.0;
        for (double a : as) {
            double f = detail::squared_shift_m1(xi, a, lw);
            if (std::isfinite(f))
                rep.C2 = std::max(rep.C2, f * std::pow(std::max(std::abs(a), 1.0), rep.beta_exp));
        }
    }

    // C.3
    {
        long long K = 1000;
        int m_half = 0, m_full = 0;
        for (long long k = -K; k < K; ++k) {
            int c = cell_count(xi, kappa, k);
            m_full = std::max(m_full, c);
            if (std::llabs(k) <= K / 2) m_half = std::max(m_half, c);
        }
        rep.m = m_full;
        rep.c3_holds = kappa > 0.5 && kappa < 1.0 && m_full >= 1 && m_full == m_half;
    }
    return rep;
}

// ----- cluster decomposition ------------------------------------------------

struct Cluster {
    long long k = 0;
    double b_lower = 0.0;  // I_k endpoints
    double b_upper = 0.0;
    double eps = 0.0;       // |I_k|
    double center = 0.0;    // c_k, midpoint of [prev upper, this lower]
    double delta = 0.0;     // half-gap
    double delta_bar = 0.0; // delta + min(eps_{k-1}, eps_k)/2
    std::vector<Atom> members;
    int size = 0;
};

struct ClusterDecomposition {
    double kappa = 0.0;
    int m = 0;
    long long k_lo = 0, k_hi = 0;
    std::vector<Cluster> clusters;
    bool fallback_used = false;
    bool width_deficient = false;
    bool midpoint_charged = false;

    const Cluster& at(long long k) const {
        if (k < k_lo || k > k_hi) throw invalid_parameter("cluster index out of range");
        return clusters[size_t(k - k_lo)];
    }
};

namespace detail {

struct IntervalChoice {
    double lo = 0.0, hi = 0.0;
    int candidate_rank = 0;  // index into the candidate list it came from
    bool deficient = false;
};

// candidate intervals inside (g(k), g(k+1)), deterministic order: interior
// equal slots first (paper width bound holds), then a finer partition, then
// centered sub-intervals of the widest obstruction-free gap
inline std::vector<IntervalChoice> interval_candidates(const Configuration& xi, double kappa,
                                                       long long k, int m) {
    double glo = g_kappa(kappa, double(k));
    double ghi = g_kappa(kappa, double(k + 1));
    double W = ghi - glo;
    double h = W / (2 * m + 1);
    std::vector<IntervalChoice> cands;
    auto push_slots = [&](int nslots, bool deficient) {
        double w = W / nslots;
        for (int j = 1; j + 1 < nslots; ++j)
            cands.push_back({glo + j * w, glo + (j + 1) * w, int(cands.size()), deficient});
    };
    push_slots(2 * m + 1, false);
    push_slots(4 * m + 3, true);

    // widest gap between obstructions (own points, mirrored points, cell ends)
    std::vector<double> obs{glo, ghi};
    for (const Atom& a : xi.window(glo, ghi)) obs.push_back(a.x);
    for (const Atom& a : xi.window(-ghi, -glo)) obs.push_back(-a.x);
    std::sort(obs.begin(), obs.end());
    double bestlen = -1.0, bestlo = glo;
    for (size_t i = 0; i + 1 < obs.size(); ++i) {
        double len = obs[i + 1] - obs[i];
        if (len > bestlen) {
            bestlen = len;
            bestlo = obs[i];
        }
    }
    if (bestlen > 0.0) {
        double margin, width;
        if (bestlen > h * (1.0 + 2.0 / 64)) {
            margin = bestlen / 64.0;
            width = bestlen - 2 * margin;
        } else if (bestlen > h) {
            margin = (bestlen - h) / 2.0;
            width = h;
        } else {
            margin = bestlen / 1024.0;
            width = bestlen - 2 * margin;
        }
        cands.push_back({bestlo + margin, bestlo + margin + width, int(cands.size()), width < h});
    }
    return cands;
}

inline bool interval_admissible(const Configuration& xi, const IntervalChoice& c) {
    return xi.count_closed(c.lo, c.hi) == 0 && xi.count_closed(-c.hi, -c.lo) == 0;
}

} // namespace detail

// Intervals I_k are chosen for k >= 0 and mirrored to negative indices, so
// I_{-k-1} = -I_k holds exactly.  Clusters cover k in [k_lo, k_hi].
inline ClusterDecomposition decompose_clusters(const Configuration& xi, double kappa,
                                               long long k_lo, long long k_hi) {
    if (!(kappa > 0.5 && kappa < 1.0))
        throw invalid_parameter("cluster decomposition needs kappa in (1/2, 1)");
    if (k_lo > k_hi) throw invalid_parameter("empty cluster index range");

    ClusterDecomposition dec;
    dec.kappa = kappa;
    dec.k_lo = k_lo;
    dec.k_hi = k_hi;

    long long P = std::max(k_hi, -k_lo) + 1;

    int m = 1;
    long long scan = std::max<long long>(P + 2, 64);
    for (long long k = -scan; k < scan; ++k) m = std::max(m, cell_count(xi, kappa, k));
    dec.m = m;

    // choose I_k for k = 0..P, mirror for negatives
    std::vector<detail::IntervalChoice> chosen(size_t(P) + 1);
    std::vector<std::vector<detail::IntervalChoice>> cands(size_t(P) + 1);
    for (long long k = 0; k <= P; ++k) {
        cands[k] = detail::interval_candidates(xi, kappa, k, m);
        bool found = false;
        for (const auto& c : cands[k]) {
            if (detail::interval_admissible(xi, c)) {
                chosen[k] = c;
                found = true;
                break;
            }
        }
        if (!found) throw numeric_failure("no admissible cluster interval in cell");
        if (chosen[k].candidate_rank >= 2 * m - 1) dec.fallback_used = true;
        if (chosen[k].deficient) dec.width_deficient = true;
    }

    auto interval_lo = [&](long long k) -> double {
        return k >= 0 ? chosen[size_t(k)].lo : -chosen[size_t(-k - 1)].hi;
    };
    auto interval_hi = [&](long long k) -> double {
        return k >= 0 ? chosen[size_t(k)].hi : -chosen[size_t(-k - 1)].lo;
    };

    // midpoint charges: advance I_k past candidates whose center hits a point
    for (long long k = 1; k <= P; ++k) {
        auto charged = [&](const detail::IntervalChoice& c) {
            double ck = (interval_hi(k - 1) + c.lo) / 2.0;
            return xi.multiplicity_at(ck) > 0 || xi.multiplicity_at(-ck) > 0;
        };
        if (!charged(chosen[k])) continue;
        bool fixed = false;
        for (const auto& c : cands[k]) {
            if (c.candidate_rank <= chosen[k].candidate_rank) continue;
            if (detail::interval_admissible(xi, c) && !charged(c)) {
                chosen[k] = c;
                if (c.deficient) dec.width_deficient = true;
                dec.fallback_used = true;
                fixed = true;
                break;
            }
        }
        if (!fixed) dec.midpoint_charged = true;
    }
    // k = 0 center is 0 by mirror symmetry; a point at the origin is accepted
    if (k_lo <= 0 && 0 <= k_hi && xi.multiplicity_at(0.0) > 0) dec.midpoint_charged = true;

    for (long long k = k_lo; k <= k_hi; ++k) {
        Cluster cl;
        cl.k = k;
        cl.b_lower = interval_lo(k);
        cl.b_upper = interval_hi(k);
        cl.eps = cl.b_upper - cl.b_lower;
        double prev_hi = interval_hi(k - 1);
        cl.center = (prev_hi + cl.b_lower) / 2.0;
        cl.delta = (cl.b_lower - prev_hi) / 2.0;
        double eps_prev = interval_hi(k - 1) - interval_lo(k - 1);
        cl.delta_bar = cl.delta + std::min(eps_prev, cl.eps) / 2.0;
        cl.members = xi.window(prev_hi, cl.b_lower);
        cl.size = 0;
        for (const Atom& a : cl.members) cl.size += a.mult;
        dec.clusters.push_back(std::move(cl));
    }
    return dec;
}

} // namespace dyson
