#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyson/io.hpp"

#include <json.hpp>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

using namespace dyson;
namespace fs = std::filesystem;

namespace {
std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct TempDir {
    fs::path p;
    TempDir() {
        p = fs::temp_directory_path() / ("dyson_io_test_" + std::to_string(::getpid()));
        fs::create_directories(p);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(p, ec);
    }
    std::string file(const std::string& name) const { return (p / name).string(); }
};
}  // namespace

TEST_CASE("csv escaping") {
    CHECK(io::csv_escape("plain") == "plain");
    CHECK(io::csv_escape("with,comma") == "\"with,comma\"");
    CHECK(io::csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(io::csv_escape("line\nbreak") == "\"line\nbreak\"");
    CHECK(io::csv_escape("") == "");
}

TEST_CASE("doubles survive a text round trip") {
    for (double v : {0.0, -1.5, 1.0 / 3.0, 6.02e23, -2.2250738585072014e-308, 123456.78901234567}) {
        std::string s = io::fmt_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("csv writer emits CRLF rows") {
    TempDir td;
    auto path = td.file("t.csv");
    {
        io::CsvWriter w(path);
        w.row({"a", "b,c"});
        w.row({io::fmt_double(1.5), "x"});
        w.close();
    }
    std::string text = slurp(path);
    CHECK(text == "a,\"b,c\"\r\n1.5,x\r\n");
}

TEST_CASE("file digests are stable and content sensitive") {
    TempDir td;
    auto p1 = td.file("a.txt");
    std::ofstream(p1, std::ios::binary) << "hello";
    uint64_t d1 = io::fnv1a64_file(p1);
    uint64_t d2 = io::fnv1a64_file(p1);
    CHECK(d1 == d2);
    std::ofstream(p1, std::ios::binary) << "hellp";
    CHECK(io::fnv1a64_file(p1) != d1);

    std::string h = io::hex64(d1);
    CHECK(h.size() == 16);
    CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);

    CHECK_THROWS_AS(io::fnv1a64_file(td.file("missing.txt")), invalid_parameter);
}

TEST_CASE("manifest records outputs with matching digests") {
    TempDir td;
    auto csv = td.file("data.csv");
    {
        io::CsvWriter w(csv);
        w.row({"x", "y"});
        w.row({"1", "2"});
        w.close();
    }
    io::RunManifest m;
    m.experiment = "unit";
    m.params = nlohmann::json{{"alpha", 1.5}, {"config", "Z"}};
    m.seed = 321;
    m.wall_seconds = 0.25;
    m.output_files = {csv};
    auto mp = td.file("manifest.json");
    io::write_manifest(mp, m);

    auto j = nlohmann::json::parse(slurp(mp));
    CHECK(j["experiment"] == "unit");
    CHECK(j["seed"] == 321);
    CHECK(j["code_version"] == DYSON_VERSION);
    CHECK(j["params"]["alpha"] == 1.5);
    REQUIRE(j["outputs"].size() == 1);
    CHECK(j["outputs"][0]["file"] == csv);
    CHECK(j["outputs"][0]["fnv1a64"] == io::hex64(io::fnv1a64_file(csv)));
}
