#include "pwforge/profiles.hpp"

#include <algorithm>
#include <cmath>

namespace pwforge {

namespace {

// Compactly supported C-infinity kernel on (-1, 1), normalized later.
double bump(double u) {
    const double w = 1.0 - u * u;
    return w <= 0.0 ? 0.0 : std::exp(-1.0 / w);
}

}  // namespace

double ProfileLadder::eval(int k, double s) const {
    const auto& t = h.at(k);
    const double p = (s - std::floor(s)) * m;
    const int i1 = static_cast<int>(p) % m;
    const double u = p - std::floor(p);
    const int i0 = (i1 + m - 1) % m;
    const int i2 = (i1 + 1) % m;
    const int i3 = (i1 + 2) % m;
    // Catmull-Rom.
    const double a0 = -0.5 * t[i0] + 1.5 * t[i1] - 1.5 * t[i2] + 0.5 * t[i3];
    const double a1 = t[i0] - 2.5 * t[i1] + 2.0 * t[i2] - 0.5 * t[i3];
    const double a2 = 0.5 * (t[i2] - t[i0]);
    return ((a0 * u + a1) * u + a2) * u + t[i1];
}

double ProfileLadder::sup(int k) const {
    double s = 0.0;
    for (double x : h.at(k)) s = std::max(s, std::abs(x));
    return s;
}

double ProfileLadder::mean_abs(int k) const {
    double s = 0.0;
    for (double x : h.at(k)) s += x;
    return std::abs(s / m);
}

ProfileLadder build_profiles(double mu1, double mu2, double delta, int m) {
    if (!(mu1 > 0.0) || !(mu2 > 0.0) || std::abs(mu1 + mu2 - 1.0) > 1e-12)
        throw precondition_error("build_profiles: mu1, mu2 > 0 with mu1 + mu2 = 1");
    if (!(delta > 0.0) || !(delta < std::min(mu1, mu2) / 2))
        throw precondition_error("build_profiles: 0 < delta < min(mu)/2 required");
    if (m < 256) throw precondition_error("build_profiles: m >= 256 required");
    if (delta * m < 16)
        throw precondition_error("build_profiles: table too coarse for delta");

    ProfileLadder L;
    L.mu1 = mu1;
    L.mu2 = mu2;
    L.delta = delta;
    L.m = m;

    // Exact step at the table nodes s_j = j / m.
    std::vector<double> step(m);
    for (int j = 0; j < m; ++j) {
        const double s = double(j) / m;
        step[j] = (s > 0.0 && s <= mu1) ? -mu2 : mu1;
    }
    step[0] = mu1;  // s = 0 belongs to the (mu1, 1] branch by periodicity

    // Mollify by circular convolution with a bump of support delta/4; the
    // kernel is a convex averaging, so the bounds and the zero mean survive.
    const int rad = std::max(2, static_cast<int>(std::ceil(delta / 8.0 * m)));
    std::vector<double> ker(2 * rad + 1);
    double ksum = 0.0;
    for (int i = -rad; i <= rad; ++i) ksum += (ker[i + rad] = bump(double(i) / rad));
    for (double& x : ker) x /= ksum;

    auto& h0 = L.h[0];
    h0.assign(m, 0.0);
    for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (int i = -rad; i <= rad; ++i) acc += ker[i + rad] * step[(j + i + m) % m];
        h0[j] = acc;
    }
    // Re-clamp and re-center (rounding level adjustments only).
    for (int pass = 0; pass < 5; ++pass) {
        double mn = 0.0;
        for (double x : h0) mn += x;
        mn /= m;
        if (std::abs(mn) < 1e-16) break;
        for (double& x : h0) x = std::clamp(x - mn, -mu2, mu1);
    }

    for (int k = 1; k <= 6; ++k) {
        const auto& prev = L.h[k - 1];
        auto& cur = L.h[k];
        cur.assign(m, 0.0);
        // Cumulative trapezoid, then mean subtraction.
        for (int j = 1; j < m; ++j)
            cur[j] = cur[j - 1] + 0.5 * (prev[j - 1] + prev[j]) / m;
        double mn = 0.0;
        for (double x : cur) mn += x;
        mn /= m;
        for (double& x : cur) x -= mn;
    }
    return L;
}

}  // namespace pwforge
