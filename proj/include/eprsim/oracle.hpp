#pragma once

// Closed-form analytical references the simulator is checked against: the
// quantum predictions for the singlet and product states, the probabilistic
// model's window weight function and first-order-in-W correlation, the
// first-order coincidence frequency, and the coincidence-loophole bound.

#include "eprsim/core.hpp"

#include <algorithm>
#include <functional>

namespace eprsim {

struct QtPrediction {
    double p_plus = 0.0;   // P+ at station 1
    double p_minus = 0.0;  // P- at station 2
    double e1 = 0.0;
    double e2 = 0.0;
    double e = 0.0;
};

/// Singlet (Case I): P+/- = 1/2, E1 = E2 = 0, E = -cos 2(alpha - beta).
inline QtPrediction qt_singlet(Angle alpha, Angle beta) {
    QtPrediction q;
    q.p_plus = 0.5;
    q.p_minus = 0.5;
    q.e = -std::cos(2.0 * (alpha.radians() - beta.radians()));
    return q;
}

/// Product state (Case II): E factorizes, E = cos 2(alpha-eta1) * cos 2(beta-eta2).
inline QtPrediction qt_product(Angle alpha, Angle beta, Angle eta1, Angle eta2) {
    QtPrediction q;
    const double ca = std::cos(alpha.radians() - eta1.radians());
    const double sb = std::sin(beta.radians() - eta2.radians());
    q.p_plus = ca * ca;
    q.p_minus = sb * sb;
    q.e1 = std::cos(2.0 * (alpha.radians() - eta1.radians()));
    q.e2 = std::cos(2.0 * (beta.radians() - eta2.radians()));
    q.e = q.e1 * q.e2;
    return q;
}

/// Singlet CHSH curve S(theta) = 3 cos 2 theta - cos 6 theta, maximal
/// (2*sqrt 2) at theta = pi/8 + j*pi/2.
inline double qt_s_theta(double theta) {
    return 3.0 * std::cos(2.0 * theta) - std::cos(6.0 * theta);
}

/// Probability that two delays drawn uniformly on [0,T1] x [0,T2] fall within
/// the window W of each other (closed form of the overlap integral).
/// Degenerate intervals are handled as the continuous limit.
inline double weight_w(double t1, double t2, double window) {
    if (window <= 0.0) return 0.0;
    if (t1 <= 0.0 && t2 <= 0.0) return 1.0;
    if (t1 <= 0.0) return std::min(window, t2) / t2;
    if (t2 <= 0.0) return std::min(window, t1) / t1;
    if (t1 > t2) std::swap(t1, t2);  // exact symmetry
    auto f = [](double x) { return x * std::abs(x); };
    double acc = t1 * t1 + t2 * t2 + 2.0 * (t1 + t2) * window;
    acc += f(window - t1) + f(window - t2);
    acc -= f(window - t1 + t2) + f(window + t1 - t2);
    return std::clamp(acc / (4.0 * t1 * t2), 0.0, 1.0);
}

namespace detail {

// Adaptive Simpson with relative error control; handles sharply peaked but
// integrable integrands.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double rel_tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double split = left + right;
    const double err = std::abs(split - whole);
    if (depth <= 0 || err <= 15.0 * (1e-300 + rel_tol * std::abs(split)))
        return split + (split - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, rel_tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, rel_tol, depth - 1);
}

inline double integrate_segment(const std::function<double(double)>& f, double a, double b,
                                double rel_tol) {
    if (b - a < 1e-15) return 0.0;
    const double m = 0.5 * (a + b);
    return adaptive_simpson(f, a, b, f(a), f(m), f(b), rel_tol, 52);
}

// Integral over [0, 2pi) minus eps-balls around `exclude`, with the domain
// pre-split at the integrand's kink locations.
inline double integrate_excluding(const std::function<double(double)>& f,
                                  const std::vector<double>& breakpoints,
                                  const std::vector<double>& exclude, double eps, double rel_tol) {
    std::vector<double> cuts{0.0, kTwoPi};
    auto push_wrapped = [&cuts](double x) {
        double v = std::fmod(x, kTwoPi);
        if (v < 0.0) v += kTwoPi;
        cuts.push_back(v);
    };
    for (double x : breakpoints) push_wrapped(x);
    for (double s : exclude) {
        push_wrapped(s - eps);
        push_wrapped(s + eps);
    }
    std::sort(cuts.begin(), cuts.end());
    auto excluded = [&exclude, eps](double x) {
        for (double s : exclude) {
            double d = std::abs(x - s);
            d = std::min(d, kTwoPi - d);
            if (d < eps) return true;
        }
        return false;
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (b - a < 1e-14 || excluded(0.5 * (a + b))) continue;
        total += integrate_segment(f, a, b, rel_tol);
    }
    return total;
}

}  // namespace detail

/// First-order-in-W two-particle correlation of the time-window model,
/// E(theta) for delay exponent d. Exact closed forms for d in {0, 2, 4, 6, 8};
/// any other d is evaluated as the ratio of quadratures over the hidden
/// polarization. The integrands are singular only where both delay amplitudes
/// vanish together (theta = 0 mod pi/2); there the ratio is evaluated with
/// eps-balls excluded and extrapolated eps -> 0. Throws std::runtime_error if
/// the extrapolation does not settle.
inline double model_e_first_order(double theta, double d) {
    if (d < 0.0) throw std::invalid_argument("model_e_first_order: d must be nonnegative");
    // E has period pi and is even; fold into [0, pi/2]
    double t = std::fmod(theta, kPi);
    if (t < 0.0) t += kPi;
    if (t > kPi / 2.0) t = kPi - t;

    const double c2 = std::cos(2.0 * t), c4 = std::cos(4.0 * t), c6 = std::cos(6.0 * t);
    const double s2 = std::sin(2.0 * t);
    if (d == 0.0) return -0.5 * c2;
    if (d == 4.0) return -c2;
    if (d == 6.0) return -0.5 * c2 * (1.0 + 24.0 / (19.0 + 5.0 * c4));
    if (d == 8.0) return -(53.0 * c2 + 7.0 * c6) / (39.0 + 21.0 * c4);
    if (d == 2.0) {
        if (t < 1e-12) return -1.0;
        if (kPi / 2.0 - t < 1e-12) return 1.0;
        return kPi / 4.0 * s2 * c2 - c2 + 0.5 * s2 * s2 * std::log(std::abs(std::tan(t)));
    }

    auto weight = [t, d](double xi) {
        const double m = std::max(std::abs(std::sin(2.0 * xi)), std::abs(std::sin(2.0 * (xi + t))));
        return std::pow(m, -d);
    };
    auto num_f = [t, weight](double xi) {
        return std::cos(2.0 * xi) * std::cos(2.0 * (xi + t)) * weight(xi);
    };

    // kinks: zeros of either |sin| factor and the branch switches of max()
    std::vector<double> breakpoints;
    for (int j = 0; j < 4; ++j) {
        const double base = j * kPi / 2.0;
        breakpoints.push_back(base);
        breakpoints.push_back(base - t);
        breakpoints.push_back(base - 0.5 * t);
        breakpoints.push_back(base + (kPi - 2.0 * t) / 4.0);
    }

    const double rel_tol = 1e-10;
    const double dist = std::min(t, kPi / 2.0 - t);
    if (dist > 1e-3) {
        const double den = detail::integrate_excluding(weight, breakpoints, {}, 0.0, rel_tol);
        const double num = detail::integrate_excluding(num_f, breakpoints, {}, 0.0, rel_tol);
        if (!(std::isfinite(num) && std::isfinite(den)) || den == 0.0)
            throw std::runtime_error("model_e_first_order: quadrature failed to converge");
        return -num / den;
    }

    // near (or at) a singular angle: exclude the vanishing points, Richardson eps -> 0
    std::vector<double> exclude;
    for (int j = 0; j < 4; ++j) exclude.push_back(j * kPi / 2.0);
    auto ratio_at = [&](double eps) {
        const double den = detail::integrate_excluding(weight, breakpoints, exclude, eps, rel_tol);
        const double num = detail::integrate_excluding(num_f, breakpoints, exclude, eps, rel_tol);
        return -num / den;
    };
    double prev = 0.0;
    bool have_prev = false;
    for (double eps = 1e-2; eps > 1e-7; eps *= 0.5) {
        const double r1 = ratio_at(eps);
        const double r2 = ratio_at(0.5 * eps);
        const double extrap = (4.0 * r2 - r1) / 3.0;  // error model O(eps^2)
        if (!std::isfinite(extrap))
            throw std::runtime_error("model_e_first_order: quadrature failed to converge");
        if (have_prev && std::abs(extrap - prev) < 1e-7) return extrap;
        prev = extrap;
        have_prev = true;
    }
    throw std::runtime_error("model_e_first_order: eps extrapolation did not settle");
}

struct FirstOrderGamma {
    double value = 0.0;
    bool first_order_valid = false;  // requires W << T0
};

/// Minimum-over-angles coincidence frequency to first order in the window:
/// gamma = 16 W / (3 pi T0).
inline FirstOrderGamma gamma_first_order(double window, double t0 = 1.0) {
    FirstOrderGamma g;
    g.value = 16.0 * window / (3.0 * kPi * t0);
    g.first_order_valid = window >= 0.0 && window <= 0.05 * t0;
    return g;
}

/// Coincidence-loophole CHSH bound 6/gamma - 4 for coincidence probability
/// gamma in (0, 1].
inline double larsson_bound(double gamma) {
    if (!(gamma > 0.0) || gamma > 1.0)
        throw std::invalid_argument("larsson_bound: gamma must be in (0, 1]");
    return 6.0 / gamma - 4.0;
}

}  // namespace eprsim
