#include "eprsim/oracle.hpp"

#include "eprsim/estimators.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace eprsim;

namespace {

// Independent check of weight_w: P(|t1 - t2| < W) for t1 ~ U[0,T1],
// t2 ~ U[0,T2]. The inner interval length is piecewise linear in t1, so a
// trapezoid rule over the kink locations is exact.
double overlap_by_integration(double t1_max, double t2_max, double w) {
    auto inner = [t2_max, w](double t1) {
        const double lo = std::max(0.0, t1 - w);
        const double hi = std::min(t2_max, t1 + w);
        return std::max(0.0, hi - lo);
    };
    std::vector<double> cuts = {0.0, t1_max, w, t2_max - w, t2_max + w};
    std::vector<double> pts;
    for (double c : cuts)
        if (c > 0.0 && c < t1_max) pts.push_back(c);
    pts.push_back(0.0);
    pts.push_back(t1_max);
    std::sort(pts.begin(), pts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        acc += 0.5 * (inner(pts[i]) + inner(pts[i + 1])) * (pts[i + 1] - pts[i]);
    return acc / (t1_max * t2_max);
}

// Reduced one-variable form of the first-order correlation: for
// theta in (0, pi/2),
//   E(theta) = -I1/I0 with I{1,0} over [theta/2, theta/2 + pi/4],
//   integrands cos 2x cos 2(x - theta) |sin 2x|^-d and |sin 2x|^-d.
// A midpoint rule suffices: the integrand is smooth on the closed interval.
double model_e_reduced(double theta, double d) {
    const double a = theta / 2.0, b = theta / 2.0 + kPi / 4.0;
    constexpr int n = 200000;
    double num = 0.0, den = 0.0;
    const double h = (b - a) / n;
    for (int i = 0; i < n; ++i) {
        const double x = a + (i + 0.5) * h;
        const double wgt = std::pow(std::abs(std::sin(2.0 * x)), -d);
        num += std::cos(2.0 * x) * std::cos(2.0 * (x - theta)) * wgt;
        den += wgt;
    }
    return -num / den;
}

}  // namespace

TEST_CASE("quantum singlet predictions") {
    CHECK(qt_singlet(Angle(0.0), Angle(kPi / 8.0)).e == Catch::Approx(-std::sqrt(2.0) / 2.0));
    CHECK(qt_singlet(Angle(0.7), Angle(0.7)).e == Catch::Approx(-1.0));
    CHECK(qt_singlet(Angle(0.0), Angle(kPi / 4.0)).e == Catch::Approx(0.0).margin(1e-15));
    CHECK(qt_singlet(Angle(0.3), Angle(1.1)).p_plus == 0.5);
    CHECK(qt_singlet(Angle(0.3), Angle(1.1)).e1 == 0.0);
}

TEST_CASE("quantum product-state predictions") {
    const Angle eta1(kPi / 6.0), eta2(kPi / 6.0 + kPi / 2.0);
    CHECK(qt_product(eta1, eta2, eta1, eta2).e == Catch::Approx(1.0));
    CHECK(qt_product(Angle(kPi / 6.0 + kPi / 3.0), Angle(0.0), eta1, eta2).p_plus == Catch::Approx(0.25));
    // the Fig.-style arrangement alpha = theta, beta = theta + pi/4 traces
    // E(theta) = sin(4 (theta - pi/6)) / 2
    for (double t = 0.0; t < kPi; t += 0.05) {
        const QtPrediction q = qt_product(Angle(t), Angle(t + kPi / 4.0), eta1, eta2);
        CHECK(q.e == Catch::Approx(0.5 * std::sin(4.0 * (t - kPi / 6.0))).margin(1e-12));
        CHECK(q.e == Catch::Approx(q.e1 * q.e2).margin(1e-15));
        CHECK(q.p_plus == Catch::Approx(std::pow(std::cos(t - kPi / 6.0), 2)).margin(1e-12));
    }
}

TEST_CASE("singlet CHSH curve") {
    CHECK(qt_s_theta(kPi / 8.0) == Catch::Approx(2.0 * std::sqrt(2.0)));
    CHECK(qt_s_theta(0.0) == Catch::Approx(2.0));
    // the curve itself has period pi; every pi/2 shift revisits |S| = 2 sqrt 2
    CHECK(qt_s_theta(kPi / 8.0 + kPi) == Catch::Approx(2.0 * std::sqrt(2.0)));
    CHECK(std::abs(qt_s_theta(kPi / 8.0 + kPi / 2.0)) == Catch::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("window weight closed form") {
    CHECK(weight_w(1.0, 1.0, 0.5) == Catch::Approx(0.75));  // (2 T0 - W) W / T0^2
    CHECK(weight_w(0.3, 0.7, 1.0) == 1.0);                  // W >= T1 + T2
    CHECK(weight_w(0.5, 0.5, 0.0) == 0.0);
}

TEST_CASE("window weight matches the overlap integral on random triples") {
    RngStream s = derive_stream(77, "triples");
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double t1 = 0.05 + s.uniform();
        const double t2 = 0.05 + s.uniform();
        const double w = 1.5 * s.uniform();
        const double closed = weight_w(t1, t2, w);
        const double integ = overlap_by_integration(t1, t2, w);
        worst = std::max(worst, std::abs(closed - integ));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("window weight symmetry, monotonicity and range") {
    RngStream s = derive_stream(78, "triples");
    for (int i = 0; i < 2000; ++i) {
        const double t1 = s.uniform(), t2 = s.uniform();
        const double w1 = s.uniform(), w2 = w1 + s.uniform();
        const double a = weight_w(t1, t2, w1);
        REQUIRE(a >= 0.0);
        REQUIRE(a <= 1.0);
        REQUIRE(a == weight_w(t2, t1, w1));
        REQUIRE(weight_w(t1, t2, w2) >= a - 1e-12);
    }
}

TEST_CASE("window weight degenerate intervals take the continuous limit") {
    CHECK(weight_w(0.0, 0.8, 0.2) == Catch::Approx(0.25));
    CHECK(weight_w(0.0, 0.8, 1.0) == 1.0);
    CHECK(weight_w(0.0, 0.0, 0.1) == 1.0);
    // limit consistency: T1 -> 0 approaches the degenerate form
    CHECK(weight_w(1e-9, 0.8, 0.2) == Catch::Approx(0.25).margin(1e-8));
}

TEST_CASE("first-order correlation closed forms") {
    for (double t = 0.0; t < kTwoPi; t += 0.1) {
        CHECK(model_e_first_order(t, 4.0) == Catch::Approx(-std::cos(2.0 * t)).margin(1e-12));
        CHECK(model_e_first_order(t, 0.0) == Catch::Approx(-0.5 * std::cos(2.0 * t)).margin(1e-12));
    }
    // d = 6 at theta = 0: -(1/2)(1 + 24/24) = -1
    CHECK(model_e_first_order(0.0, 6.0) == Catch::Approx(-1.0));
    CHECK(model_e_first_order(0.0, 8.0) == Catch::Approx(-1.0));
    CHECK(model_e_first_order(0.0, 2.0) == Catch::Approx(-1.0));
    // perfect anticorrelation at equal settings for every listed d >= 2
    for (double d : {2.0, 4.0, 6.0, 8.0}) CHECK(model_e_first_order(0.0, d) == Catch::Approx(-1.0));
}

TEST_CASE("closed forms agree with the reduced integral") {
    for (double d : {2.0, 6.0, 8.0}) {
        for (double t : {0.3, 0.7, kPi / 8.0, 1.2}) {
            CHECK(model_e_first_order(t, d) == Catch::Approx(model_e_reduced(t, d)).margin(1e-5));
        }
    }
}

TEST_CASE("quadrature handles non-tabulated exponents") {
    // d = 3 against the independently reduced integral
    for (double t : {0.4, kPi / 6.0, 1.0, 1.4}) {
        CHECK(model_e_first_order(t, 3.0) == Catch::Approx(model_e_reduced(t, 3.0)).margin(1e-6));
    }
    CHECK(model_e_first_order(kPi / 6.0, 3.0) == Catch::Approx(-0.432940).margin(1e-5));
    // regularized evaluation at the singular angle reproduces the limit
    CHECK(model_e_first_order(0.0, 3.0) == Catch::Approx(-1.0).margin(1e-4));
    CHECK(model_e_first_order(kPi / 2.0, 3.0) == Catch::Approx(1.0).margin(1e-4));
}

TEST_CASE("first-order correlation symmetry in theta") {
    for (double d : {0.0, 2.0, 3.0, 4.0, 6.0, 8.0}) {
        for (double t : {0.2, 0.9, 1.4}) {
            const double e = model_e_first_order(t, d);
            CHECK(model_e_first_order(t + kPi, d) == Catch::Approx(e).margin(1e-9));
            CHECK(model_e_first_order(-t, d) == Catch::Approx(e).margin(1e-9));
        }
    }
}

TEST_CASE("first-order theory S_max ordering in d") {
    auto smax_of = [](double d) {
        return smax_theta_scan(
                   [d](Angle a, Angle b) -> std::optional<double> {
                       return model_e_first_order(a.radians() - b.radians(), d);
                   },
                   720)
            .s_max;
    };
    CHECK(smax_of(0.0) == Catch::Approx(std::sqrt(2.0)).margin(1e-3));
    CHECK(smax_of(4.0) == Catch::Approx(2.0 * std::sqrt(2.0)).margin(1e-3));
    CHECK(smax_of(6.0) > 2.0 * std::sqrt(2.0));
    CHECK(smax_of(8.0) > 2.0 * std::sqrt(2.0));
    // d = 0 model: max |S(theta)| = sqrt(2) (the no-time-tag regime)
    CHECK(smax_of(0.0) <= 2.0);
}

TEST_CASE("first-order coincidence frequency") {
    CHECK(gamma_first_order(0.003).value == Catch::Approx(0.0050930).margin(1e-6));
    CHECK(gamma_first_order(0.0).value == 0.0);
    CHECK(gamma_first_order(0.003).first_order_valid);
    CHECK(!gamma_first_order(0.5).first_order_valid);
}

TEST_CASE("coincidence-loophole bound") {
    CHECK(larsson_bound(1.0) == Catch::Approx(2.0));
    CHECK(std::abs(larsson_bound(3.0 - 3.0 / std::sqrt(2.0)) - 2.0 * std::sqrt(2.0)) < 1e-12);
    CHECK(larsson_bound(0.01) == Catch::Approx(596.0));
    CHECK_THROWS_AS(larsson_bound(0.0), std::invalid_argument);
    CHECK_THROWS_AS(larsson_bound(-0.5), std::invalid_argument);
    CHECK_THROWS_AS(larsson_bound(1.5), std::invalid_argument);
}
