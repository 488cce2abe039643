#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dyson/configuration.hpp"

#include <cmath>
#include <vector>

using namespace dyson;

TEST_CASE("finite construction merges duplicates and sorts") {
    auto c = Configuration::finite({{1.0, 1}, {-0.5, 2}, {1.0, 1}});
    auto a = c.atoms();
    REQUIRE(a.size() == 2);
    CHECK(a[0].x == -0.5);
    CHECK(a[0].mult == 2);
    CHECK(a[1].x == 1.0);
    CHECK(a[1].mult == 2);
    CHECK(c.total_count() == 4);
    CHECK(c.support_min() == -0.5);
    CHECK(c.support_max() == 1.0);
    CHECK_FALSE(c.simple());
    CHECK(Configuration::finite({{0.0, 1}, {2.0, 1}}).simple());
}

TEST_CASE("lattice window enumerates integers") {
    auto z = Configuration::lattice();
    auto w = z.window(-3.2, 3.2);
    REQUIRE(w.size() == 7);
    for (int i = 0; i < 7; ++i) {
        CHECK(w[i].x == double(i - 3));
        CHECK(w[i].mult == 1);
    }
    CHECK(z.count_closed(0.0, 3.0) == 4);
    CHECK(z.count_open(0.0, 3.0) == 2);
    CHECK(z.multiplicity_at(2.0) == 1);
    CHECK(z.multiplicity_at(2.5) == 0);
    // large windows stay exact
    CHECK(z.count_closed(-1e5, 1e5) == 200001);
}

TEST_CASE("stretched lattice generator") {
    auto eta = Configuration::stretched_lattice(0.8);
    // point at l is sign(l) |l|^{0.8}
    double p2 = std::pow(2.0, 0.8);
    auto w = eta.window(p2 - 1e-9, p2 + 1e-9);
    REQUIRE(w.size() == 1);
    CHECK(w[0].x == doctest::Approx(p2).epsilon(1e-15));
    CHECK(eta.multiplicity_at(0.0) == 1);
    CHECK(eta.window(-1e-9, 1e-9).size() == 1);
    // odd symmetry of the generator
    auto wm = eta.window(-p2 - 1e-9, -p2 + 1e-9);
    REQUIRE(wm.size() == 1);
    CHECK(wm[0].x == doctest::Approx(-p2).epsilon(1e-15));
}

TEST_CASE("shift dilate square transforms") {
    auto z = Configuration::lattice();

    auto zs = z.shifted(0.25);
    auto w = zs.window(-2.0, 2.0);
    REQUIRE(w.size() == 4);
    CHECK(w[0].x == doctest::Approx(-1.75));
    CHECK(w[3].x == doctest::Approx(1.25));

    // dilate by 1 is the identity
    auto zd1 = z.dilated(1.0);
    CHECK(zd1.window(-3.0, 3.0).size() == z.window(-3.0, 3.0).size());

    // kappa = 1 lattice dilated by c has spacing c
    auto zc = z.dilated(0.5);
    auto wc = zc.window(-1.01, 1.01);
    REQUIRE(wc.size() == 5);
    CHECK(wc[1].x == doctest::Approx(-0.5));

    // square merges +-x
    auto sq = Configuration::finite({{-1.0, 1}, {1.0, 1}}).squared_config();
    auto wa = sq.atoms();
    REQUIRE(wa.size() == 1);
    CHECK(wa[0].x == 1.0);
    CHECK(wa[0].mult == 2);

    auto sq0 = Configuration::finite({{0.0, 1}}).squared_config();
    CHECK(sq0.atoms().size() == 1);
    CHECK(sq0.atoms()[0].mult == 1);

    // lattice restricted to [-2,2] then squared: {0^1, 1^2, 4^2}
    auto zq = z.restricted(-2.0, 2.0).squared_config();
    auto wq = zq.atoms();
    REQUIRE(wq.size() == 3);
    CHECK(wq[0].x == 0.0);
    CHECK(wq[0].mult == 1);
    CHECK(wq[1].x == 1.0);
    CHECK(wq[1].mult == 2);
    CHECK(wq[2].x == 4.0);
    CHECK(wq[2].mult == 2);

    // squared infinite lattice keeps an exact rule
    auto zsq = z.squared_config();
    CHECK(zsq.multiplicity_at(4.0) == 2);
    CHECK(zsq.multiplicity_at(0.0) == 1);
    CHECK(zsq.count_closed(-0.5, 4.5) == 5);
}

TEST_CASE("point edits on infinite configurations") {
    auto z = Configuration::lattice();
    auto z5 = z.without({{5.0, 1}});
    CHECK(z5.multiplicity_at(5.0) == 0);
    CHECK(z5.count_closed(4.0, 6.0) == 2);
    CHECK(z5.count_closed(-0.5, 0.5) == 1);
}

TEST_CASE("expanded flattens multiplicities") {
    auto c = Configuration::finite({{0.0, 2}, {1.0, 1}});
    auto xs = c.expanded();
    REQUIRE(xs.size() == 3);
    CHECK(xs[0] == 0.0);
    CHECK(xs[1] == 0.0);
    CHECK(xs[2] == 1.0);
}

TEST_CASE("config literal grammar round trips") {
    auto c1 = parse_config("points:-0.5^1,0.5^1");
    REQUIRE(c1.is_finite());
    CHECK(c1.atoms().size() == 2);
    CHECK(format_config(c1) == "points:-0.5^1,0.5^1");

    auto c2 = parse_config("points:0^2,1");
    CHECK(c2.atoms()[0].mult == 2);
    CHECK(c2.atoms()[1].mult == 1);

    auto z = parse_config("Z");
    CHECK_FALSE(z.is_finite());
    CHECK(z.tail().kappa == 1.0);
    CHECK(format_config(z) == "Z");

    auto e = parse_config("eta:0.8");
    CHECK(e.tail().kappa == 0.8);

    auto zt = parse_config("Z|shift:0.5|dilate:2");
    auto again = parse_config(format_config(zt));
    auto wa = zt.window(-4.0, 4.0);
    auto wb = again.window(-4.0, 4.0);
    REQUIRE(wa.size() == wb.size());
    for (size_t i = 0; i < wa.size(); ++i) CHECK(wa[i].x == doctest::Approx(wb[i].x).epsilon(1e-15));

    auto zq = parse_config("Z|square");
    CHECK(zq.multiplicity_at(1.0) == 2);

    CHECK_THROWS_AS(parse_config("lattice"), invalid_parameter);
    CHECK_THROWS_AS(parse_config("points:1^0"), invalid_parameter);
    CHECK_THROWS_AS(parse_config("points:1^1.5"), invalid_parameter);
    CHECK_THROWS_AS(parse_config("Z|rotate:1"), invalid_parameter);

    // squared stretched lattice: (l^0.8)^2, +-l merge
    auto sq8 = parse_config("eta:0.8").squared_config().window(-1.0, 1.0);
    REQUIRE(sq8.size() == 2);
    CHECK(sq8[0].x == 0.0);
    CHECK(sq8[0].mult == 1);
    CHECK(sq8[1].x == doctest::Approx(1.0));
    CHECK(sq8[1].mult == 2);
}

TEST_CASE("signed principal-value sum") {
    auto z = Configuration::lattice();
    for (double L : {2.0, 7.0, 100.0, 1e4}) CHECK(m_signed(z, L) == 0.0);

    auto eta = Configuration::stretched_lattice(0.8);
    for (double L : {5.0, 50.0, 500.0}) CHECK(m_signed(eta, L) == 0.0);

    CHECK(m_signed(Configuration::finite({{1.0, 1}}), 2.0) == 1.0);
    CHECK(m_signed(Configuration::finite({{0.0, 1}}), 2.0) == 0.0);
    // unbalanced multiplicities at +-x contribute the difference
    CHECK(m_signed(Configuration::finite({{-2.0, 1}, {2.0, 3}}), 3.0) == doctest::Approx(1.0));
}

TEST_CASE("alpha moment sum") {
    auto z = Configuration::lattice();
    double expect = 0.0;
    for (int l = 1; l <= 10; ++l) expect += 2.0 * std::pow(double(l), -1.5);
    CHECK(m_alpha(z, 10.0, 1.5) == doctest::Approx(std::pow(expect, 1.0 / 1.5)).epsilon(1e-13));
    CHECK(m_alpha(Configuration::finite({{0.0, 1}}), 5.0, 1.5) == 0.0);
    CHECK_THROWS_AS(m_alpha(z, 5.0, 0.0), invalid_parameter);
}

TEST_CASE("condition report for lattice-type configurations") {
    auto rep = check_conditions(Configuration::lattice(), 200.0, 1.5, 1.0);
    CHECK(rep.c1_holds);
    CHECK(rep.c2i_holds);
    CHECK(rep.m_signed == 0.0);

    auto rep8 = check_conditions(Configuration::stretched_lattice(0.8), 100.0, 1.5, 0.8);
    CHECK(rep8.c1_holds);
    CHECK(rep8.c2i_holds);

    // single point: both sums vanish, origin excluded
    auto rep0 = check_conditions(Configuration::finite({{0.0, 1}}), 10.0, 1.5, 1.0);
    CHECK(rep0.m_signed == 0.0);
    CHECK(rep0.m_alpha == 0.0);

    CHECK_THROWS_AS(check_conditions(Configuration::lattice(), 0.5, 1.5, 1.0), invalid_parameter);
}

TEST_CASE("cluster decomposition of the integer lattice") {
    auto z = Configuration::lattice();
    auto dec = decompose_clusters(z, 0.9, -5, 5);
    CHECK_FALSE(dec.fallback_used);

    // cluster 0 straddles the origin: its gap interval sits inside (0,1), its
    // mirror image is -I_0, and the center lands exactly on 0 (charged for Z,
    // which the decomposition records rather than rejects)
    const auto& c0 = dec.at(0);
    CHECK(c0.b_lower > 0.0);
    CHECK(c0.b_upper < 1.0);
    CHECK(z.count_open(c0.b_lower, c0.b_upper) == 0);
    CHECK(c0.center == 0.0);
    CHECK(dec.midpoint_charged);
    bool has_origin = false;
    for (const auto& at : c0.members)
        if (at.x == 0.0) has_origin = true;
    CHECK(has_origin);

    // sizes bounded by 2 m(xi, kappa)
    for (int k = -5; k <= 5; ++k) CHECK(dec.at(k).size <= 2 * dec.m);

    // mirror symmetry of the construction for symmetric input; nonzero centers
    // fall between lattice points
    for (int k = 1; k <= 5; ++k) {
        CHECK(dec.at(k).center == doctest::Approx(-dec.at(-k).center).epsilon(1e-14));
        CHECK(z.multiplicity_at(dec.at(k).center) == 0);
    }

    // partition: concatenated members are consecutive integers with no overlap
    std::vector<double> all;
    for (int k = -5; k <= 5; ++k)
        for (const auto& at : dec.at(k).members) all.push_back(at.x);
    std::sort(all.begin(), all.end());
    REQUIRE(all.size() >= 2);
    for (size_t i = 1; i < all.size(); ++i) CHECK(all[i] - all[i - 1] == 1.0);

    // members of cluster k sit between the adjacent gap intervals
    for (int k = -4; k <= 5; ++k) {
        const auto& prev = dec.at(k - 1);
        const auto& cur = dec.at(k);
        for (const auto& at : cur.members) {
            CHECK(at.x >= prev.b_upper);
            CHECK(at.x <= cur.b_lower);
        }
    }

    CHECK_THROWS_AS(decompose_clusters(z, 0.3, -2, 2), invalid_parameter);
}

TEST_CASE("cluster decomposition handles multiplicities") {
    // squared lattice: multiplicity 2 everywhere except the origin
    auto sq = Configuration::lattice().squared_config();
    auto dec = decompose_clusters(sq, 0.9, 0, 3);
    for (int k = 0; k <= 3; ++k) {
        const auto& c = dec.at(k);
        CHECK(sq.count_open(c.b_lower, c.b_upper) == 0);
        // the k=0 center is pinned to the origin, which carries a point here
        if (k == 0)
            CHECK(c.center == 0.0);
        else
            CHECK(sq.multiplicity_at(c.center) == 0);
    }
    CHECK(dec.midpoint_charged);
}
