#pragma once

#include <cmath>
#include <functional>

namespace pconcave {

namespace detail {

// Gauss(7)-Kronrod(15) pair on [-1, 1].
inline constexpr double kGK15Nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double kGK15Weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double kG7Weights[4] = {0.129484966168870, 0.279705391489277,
                                         0.381830050505119, 0.417959183673469};

template <typename F>
void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    double k15 = 0.0, g7 = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double x = hw * kGK15Nodes[i];
        const double fs = f(c - x) + f(c + x);
        k15 += kGK15Weights[i] * fs;
        if (i % 2 == 1) g7 += kG7Weights[i / 2] * fs;  // Gauss nodes sit at odd indices
    }
    const double fc = f(c);
    k15 += kGK15Weights[7] * fc;
    g7 += kG7Weights[3] * fc;
    kronrod = hw * k15;
    err = std::abs(hw * (k15 - g7));
}

template <typename F>
double adaptive_gk(const F& f, double a, double b, double rel_tol, double abs_tol, int depth) {
    double val = 0.0, err = 0.0;
    gk15(f, a, b, val, err);
    if (!std::isfinite(val) || !std::isfinite(err)) return val;  // splitting cannot help
    if (depth <= 0 || err <= std::max(abs_tol, rel_tol * std::abs(val))) return val;
    const double m = 0.5 * (a + b);
    return adaptive_gk(f, a, m, rel_tol, 0.5 * abs_tol, depth - 1) +
           adaptive_gk(f, m, b, rel_tol, 0.5 * abs_tol, depth - 1);
}

}  // namespace detail

// Adaptive Gauss-Kronrod quadrature of f over [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-11, double abs_tol = 1e-15) {
    if (a == b) return 0.0;
    return detail::adaptive_gk(f, a, b, rel_tol, abs_tol, 48);
}

}  // namespace pconcave
