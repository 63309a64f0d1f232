#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "dsb/rng.hpp"
#include "dsb/wilcoxon.hpp"
#include "oracles.hpp"

using dsb::Rng;
using dsb::stats::WilcoxonResult;
using dsb::stats::wilcoxon_signed_rank;

TEST_CASE("identical samples are degenerate with p = 1") {
    Eigen::VectorXd a(4);
    a << 1.0, 2.0, 3.0, 4.0;
    const WilcoxonResult r = wilcoxon_signed_rank(a, a);
    CHECK(r.degenerate);
    CHECK(r.method == "degenerate");
    CHECK(r.p_value == 1.0);
    CHECK(r.statistic == 0.0);
}

TEST_CASE("five one-sided differences give the textbook exact p") {
    // All five differences positive: W+ = 1+2+3+4+5 = 15, and only the two
    // extreme sign assignments reach that tail, so p = 2 * 1/32 = 0.0625.
    Eigen::VectorXd a(5), b(5);
    a << 1, 2, 3, 4, 5;
    b << 0, 0, 0, 0, 0;
    const WilcoxonResult r = wilcoxon_signed_rank(a, b);
    CHECK(r.method == "exact");
    CHECK(r.statistic == doctest::Approx(15.0).epsilon(1e-15));
    CHECK(r.p_value == doctest::Approx(0.0625).epsilon(1e-15));

    // Swapping the arguments flips the statistic to 0 but keeps the p-value.
    const WilcoxonResult s = wilcoxon_signed_rank(b, a);
    CHECK(s.statistic == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(s.p_value == doctest::Approx(0.0625).epsilon(1e-15));
}

TEST_CASE("exact path matches independent sign enumeration") {
    Rng rng(71);
    for (int rep = 0; rep < 80; ++rep) {
        const int n = 2 + static_cast<int>(rng.uniform_below(9));  // up to 10 pairs
        Eigen::VectorXd a(n), b(n);
        for (int i = 0; i < n; ++i) {
            // Quantize to quarter-integers so ties and zero differences occur often.
            a[i] = std::round(rng.normal() * 4.0) / 4.0;
            b[i] = std::round(rng.normal() * 4.0) / 4.0;
        }
        const WilcoxonResult got = wilcoxon_signed_rank(a, b);
        const oracle::WilcoxonOracle want = oracle::wilcoxon_enumeration(a, b);
        CHECK(got.degenerate == want.degenerate);
        if (want.degenerate) {
            CHECK(got.p_value == 1.0);
            continue;
        }
        CHECK(got.method == "exact");
        CHECK(got.statistic == doctest::Approx(want.w_plus).epsilon(1e-12));
        CHECK(got.p_value == doctest::Approx(want.p_two_sided).epsilon(1e-12));
    }
}

TEST_CASE("zero differences are dropped before ranking") {
    // Pairs 0 and 3 are ties; the test must reduce to the 5-pair one-sided case.
    Eigen::VectorXd a(7), b(7);
    a << 9.0, 1, 2, -4.0, 3, 4, 5;
    b << 9.0, 0, 0, -4.0, 0, 0, 0;
    const WilcoxonResult r = wilcoxon_signed_rank(a, b);
    CHECK(r.method == "exact");
    CHECK(r.statistic == doctest::Approx(15.0).epsilon(1e-15));
    CHECK(r.p_value == doctest::Approx(0.0625).epsilon(1e-15));
}

TEST_CASE("large samples switch to the normal approximation") {
    Rng rng(72);
    const int n = 40;
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
        a[i] = rng.normal();
        b[i] = a[i] + rng.normal();  // exchangeable differences: null is true
    }
    const WilcoxonResult r = wilcoxon_signed_rank(a, b);
    CHECK(r.method == "normal");
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);

    // A strong one-sided shift must be detected decisively.
    const WilcoxonResult shifted = wilcoxon_signed_rank(a, a.array() - 5.0);
    CHECK(shifted.method == "normal");
    CHECK(shifted.p_value < 1e-6);
    CHECK(shifted.statistic == doctest::Approx(n * (n + 1) / 2.0).epsilon(1e-15));
}

TEST_CASE("normal path is continuous with the exact path near the cutoff") {
    // 21 nonzero differences (normal path) with a mild shift should land in the
    // same ballpark as the exact p for the 20-pair prefix: same order of
    // magnitude, not orders apart.
    Rng rng(73);
    const int n = 21;
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
        a[i] = rng.normal() + 0.6;
        b[i] = rng.normal();
    }
    const WilcoxonResult full = wilcoxon_signed_rank(a, b);
    CHECK(full.method == "normal");
    const WilcoxonResult head = wilcoxon_signed_rank(a.head(20), b.head(20));
    CHECK(head.method == "exact");
    CHECK(full.p_value > 0.0);
    CHECK(full.p_value < 1.0);
    // Both should agree on which side of 0.5 the evidence falls.
    CHECK((full.p_value < 0.5) == (head.p_value < 0.5));
}

TEST_CASE("length mismatch is rejected") {
    Eigen::VectorXd a(3), b(4);
    a.setZero();
    b.setZero();
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, b), std::invalid_argument);
}
