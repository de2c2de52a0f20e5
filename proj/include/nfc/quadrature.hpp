#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "nfc/error.hpp"

namespace nfc::quad {

template <class T>
struct Estimate {
    T value;
    double error;
};

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace detail

// One Gauss-Kronrod 7/15 panel; error is |K15 - G7|.
template <class T, class F>
Estimate<T> gauss_kronrod_15(const F &f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const T fc = f(c);
    T k15 = fc * detail::kronrod_weights[7];
    T g7 = fc * detail::gauss_weights[3];
    for (int i = 0; i < 7; ++i) {
        const double dx = h * detail::kronrod_nodes[i];
        const T s = f(c - dx) + f(c + dx);
        k15 += s * detail::kronrod_weights[i];
        if (i % 2 == 1)
            g7 += s * detail::gauss_weights[i / 2];
    }
    return {k15 * h, std::abs((k15 - g7) * h)};
}

// Globally adaptive bisection on [a, b] until the summed error estimate is
// below max(abs_tol, rel_tol * |I|).
template <class T, class F>
Estimate<T> adaptive_gauss_kronrod(const F &f, double a, double b, double abs_tol, double rel_tol,
                                   std::size_t max_panels = 2000)
{
    struct Panel {
        double a, b;
        Estimate<T> est;
        bool operator<(const Panel &o) const { return est.error < o.est.error; }
    };
    std::priority_queue<Panel> panels;
    Panel first{a, b, gauss_kronrod_15<T>(f, a, b)};
    T total = first.est.value;
    double err = first.est.error;
    panels.push(first);
    while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (panels.size() >= max_panels)
            throw QuadratureError("adaptive quadrature did not converge", err);
        const Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel left{worst.a, mid, gauss_kronrod_15<T>(f, worst.a, mid)};
        Panel right{mid, worst.b, gauss_kronrod_15<T>(f, mid, worst.b)};
        total += left.est.value + right.est.value - worst.est.value;
        err += left.est.error + right.est.error - worst.est.error;
        panels.push(left);
        panels.push(right);
    }
    // Re-sum to shed the drift of incremental updates.
    T sum{};
    double esum = 0.0;
    while (!panels.empty()) {
        sum += panels.top().est.value;
        esum += panels.top().est.error;
        panels.pop();
    }
    return {sum, esum};
}

// Mean of a 2*pi periodic function, trapezoid rule with doubling.
template <class T, class F>
Estimate<T> periodic_mean(const F &f, double abs_tol, std::size_t start = 16,
                          std::size_t max_points = 1u << 16)
{
    const double two_pi = 2.0 * 3.14159265358979323846;
    std::size_t n = start;
    T sum{};
    for (std::size_t i = 0; i < n; ++i)
        sum += f(two_pi * static_cast<double>(i) / static_cast<double>(n));
    T mean = sum / static_cast<double>(n);
    while (true) {
        T add{};
        for (std::size_t i = 0; i < n; ++i)
            add += f(two_pi * (static_cast<double>(i) + 0.5) / static_cast<double>(n));
        sum += add;
        n *= 2;
        const T next = sum / static_cast<double>(n);
        const double err = std::abs(next - mean);
        mean = next;
        if (err <= abs_tol && n >= 4 * start)
            return {mean, err};
        if (n >= max_points)
            throw QuadratureError("periodic trapezoid did not converge", err);
    }
}

}  // namespace nfc::quad
