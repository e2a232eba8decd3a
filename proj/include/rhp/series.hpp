#pragma once

// Truncated power series with real coefficients and the tail integral of a
// Laurent density at infinity.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "rhp/error.hpp"
#include "rhp/surface.hpp"

namespace rhp {

/// c_0 + c_1 t + ... + c_{K-1} t^{K-1}, truncated at order K.
class PowerSeries {
public:
    PowerSeries() = default;
    PowerSeries(std::vector<double> coeffs, std::size_t order) : c_(std::move(coeffs)) {
        c_.resize(order, 0.0);
    }

    std::size_t order() const { return c_.size(); }
    double operator[](std::size_t i) const { return i < c_.size() ? c_[i] : 0.0; }
    const std::vector<double>& coeffs() const { return c_; }

    friend PowerSeries operator*(const PowerSeries& a, const PowerSeries& b) {
        const std::size_t K = std::min(a.order(), b.order());
        std::vector<double> out(K, 0.0);
        for (std::size_t i = 0; i < K; ++i) {
            if (a.c_[i] == 0.0) continue;
            for (std::size_t j = 0; i + j < K; ++j) out[i + j] += a.c_[i] * b.c_[j];
        }
        return PowerSeries(std::move(out), K);
    }
    friend PowerSeries operator+(const PowerSeries& a, const PowerSeries& b) {
        const std::size_t K = std::min(a.order(), b.order());
        std::vector<double> out(K);
        for (std::size_t i = 0; i < K; ++i) out[i] = a.c_[i] + b.c_[i];
        return PowerSeries(std::move(out), K);
    }
    friend PowerSeries operator*(double s, const PowerSeries& a) {
        std::vector<double> out = a.c_;
        for (double& v : out) v *= s;
        return PowerSeries(std::move(out), a.order());
    }

    /// 1/a by the triangular recurrence; needs a_0 != 0.
    PowerSeries inverse() const {
        if (c_.empty() || c_[0] == 0.0) throw ContractViolation("series inverse needs c_0 != 0");
        std::vector<double> r(order(), 0.0);
        r[0] = 1.0 / c_[0];
        for (std::size_t n = 1; n < order(); ++n) {
            double s = 0.0;
            for (std::size_t k = 1; k <= n; ++k) s += c_[k] * r[n - k];
            r[n] = -s / c_[0];
        }
        return PowerSeries(std::move(r), order());
    }

    /// Square root with positive constant term, by Newton iteration
    /// y <- (y + a / y) / 2, doubling the number of correct terms per step.
    PowerSeries sqrt() const {
        if (c_.empty() || !(c_[0] > 0.0)) throw ContractViolation("series sqrt needs c_0 > 0");
        const std::size_t K = order();
        PowerSeries y({std::sqrt(c_[0])}, K);
        for (std::size_t correct = 1; correct < K; correct *= 2) {
            const PowerSeries q = (*this) * y.inverse();
            y = 0.5 * (y + q);
        }
        // One more sweep absorbs rounding in the last doubling.
        y = 0.5 * (y + (*this) * y.inverse());
        return y;
    }

    template <class T>
    T evaluate(T t) const {
        T s = T(0.0);
        for (std::size_t i = c_.size(); i-- > 0;) s = s * t + T(c_[i]);
        return s;
    }

private:
    std::vector<double> c_;
};

/// prod_e (1 - e t) for the given roots, as a series of the requested order.
inline PowerSeries linear_factor_product(const std::vector<double>& roots, std::size_t order) {
    PowerSeries p({1.0}, order);
    for (double e : roots) p = p * PowerSeries({1.0, -e}, order);
    return p;
}

/// Laurent density sum_{m>=1} c_m z^{-m} near infinity and its antiderivative
/// G(z) = c_1 log z - sum_{m>=2} c_m z^{1-m}/(m-1), normalized so that
/// G(z) -> 0 when c_1 = 0. `coeffs[m]` holds c_m; coeffs[0] is unused.
struct LaurentTail {
    std::vector<double> coeffs;
    double radius = 0.0; ///< smallest |z| at which the truncated series is trusted

    std::size_t order() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }

    cplx density(cplx z) const {
        const cplx t = 1.0 / z;
        cplx s = 0.0;
        for (std::size_t m = coeffs.size(); m-- > 1;) s = (s + coeffs[m]) * t;
        return s;
    }
};

struct TailValue {
    cplx value;
    double error; ///< magnitude of the last two retained terms
};

/// log z with the argument taken in the closed half-plane `side`
/// (above: [0, pi], below: [-pi, 0]).
inline cplx half_plane_log(cplx z, Side side) {
    double arg = std::atan2(z.imag(), z.real());
    if (z.imag() == 0.0 && z.real() < 0.0) arg = side == Side::below ? -std::numbers::pi : std::numbers::pi;
    if (z.imag() == 0.0 && z.real() > 0.0) arg = 0.0;
    return {std::log(std::abs(z)), arg};
}

/// int from infinity to Z of sum_{m=2}^{K} c_m zeta^{-m} d zeta
///   = -sum c_m Z^{1-m} / (m - 1).
/// With a nonzero c_1 the log term c_1 log Z is included (argument per `side`).
inline TailValue tail_integral(const LaurentTail& tail, cplx Z, Side side = Side::above) {
    if (std::abs(Z) < tail.radius) throw ContractViolation("|Z| is below the validated tail radius");
    TailValue out{0.0, 0.0};
    const cplx t = 1.0 / Z;
    cplx power = 1.0; // Z^{1-m} for m = 1
    for (std::size_t m = 2; m < tail.coeffs.size(); ++m) {
        power *= t;
        const cplx term = -tail.coeffs[m] * power / static_cast<double>(m - 1);
        out.value += term;
        if (m + 2 >= tail.coeffs.size()) out.error = std::max(out.error, std::abs(term));
    }
    if (tail.coeffs.size() > 1 && tail.coeffs[1] != 0.0) out.value += tail.coeffs[1] * half_plane_log(Z, side);
    return out;
}

} // namespace rhp
