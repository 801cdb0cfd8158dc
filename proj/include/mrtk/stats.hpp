// Numeric kernels shared by the estimators: normal/chi-square distribution
// functions and weighted least-squares fits over Eigen expressions.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mrtk::stats {

// 95% CI multiplier, two-sided normal.
inline constexpr double kCi95Z = 1.959964;

// Smallest p-value reported anywhere; keeps p within (0, 1].
inline constexpr double kMinPValue = 1e-300;

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double normal_upper_tail(double x) {
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

// Two-sided p for a standard-normal z, clamped into (0, 1].
inline double two_sided_normal_p(double z) {
    double p = std::erfc(std::abs(z) / std::sqrt(2.0));
    if (p < kMinPValue) p = kMinPValue;
    if (p > 1.0) p = 1.0;
    return p;
}

// Acklam rational approximation for Phi^-1(p), polished with one Halley step.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::invalid_argument("normal_quantile: p outside [0,1]");
    }
    static const double a1 = -3.969683028665376e+01, a2 = 2.209460984245205e+02,
                        a3 = -2.759285104469687e+02, a4 = 1.383577518672690e+02,
                        a5 = -3.066479806614716e+01, a6 = 2.506628277459239e+00;
    static const double b1 = -5.447609879822406e+01, b2 = 1.615858368580409e+02,
                        b3 = -1.556989798598866e+02, b4 = 6.680131188771972e+01,
                        b5 = -1.328068155288572e+01;
    static const double c1 = -7.784894002430293e-03, c2 = -3.223964580411365e-01,
                        c3 = -2.400758277161838e+00, c4 = -2.549732539343734e+00,
                        c5 = 4.374664141464968e+00, c6 = 2.938163982698783e+00;
    static const double d1 = 7.784695709041462e-03, d2 = 3.224671290700398e-01,
                        d3 = 2.445134137142996e+00, d4 = 3.754408661907416e+00;
    double q, r, x;
    if (p < 0.02425) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c1 * q + c2) * q + c3) * q + c4) * q + c5) * q + c6) /
            ((((d1 * q + d2) * q + d3) * q + d4) * q + 1.0);
    } else if (p > 1.0 - 0.02425) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c1 * q + c2) * q + c3) * q + c4) * q + c5) * q + c6) /
            ((((d1 * q + d2) * q + d3) * q + d4) * q + 1.0);
    } else {
        q = p - 0.5;
        r = q * q;
        x = (((((a1 * r + a2) * r + a3) * r + a4) * r + a5) * r + a6) * q /
            (((((b1 * r + b2) * r + b3) * r + b4) * r + b5) * r + 1.0);
    }
    // one Halley step against the exact CDF
    double u = normal_cdf(x) - p;
    double v = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    x = x - u / (v + x * u / 2.0);
    return x;
}

namespace detail {

// Lower regularized incomplete gamma P(a,x) by series expansion; valid x < a+1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma Q(a,x) by Lentz continued fraction; x >= a+1.
inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-290;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// Upper regularized incomplete gamma Q(a,x).
inline double reg_upper_gamma(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::invalid_argument("reg_upper_gamma: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_contfrac(a, x);
}

// Upper-tail probability of a chi-square(df) at q, clamped into (0, 1].
inline double chi_squared_upper_tail(double q, int df) {
    if (df < 1) throw std::invalid_argument("chi_squared_upper_tail: df < 1");
    if (q < 0.0) throw std::invalid_argument("chi_squared_upper_tail: negative statistic");
    double p = reg_upper_gamma(0.5 * df, 0.5 * q);
    if (p < kMinPValue) p = kMinPValue;
    if (p > 1.0) p = 1.0;
    return p;
}

// ---------------------------------------------------------------------------
// Weighted least squares. All fits report sigma=1 standard errors plus the
// weighted residual sum of squares so callers can apply their own residual
// scaling policy (the multiplicative random-effects floor lives with the
// estimators, not here).
// ---------------------------------------------------------------------------

template <typename Scalar>
struct OriginFit {
    Scalar beta{};
    Scalar se{};     // sigma = 1
    Scalar rss_w{};  // weighted RSS; equals Cochran's Q for Wald-ratio data
    Eigen::Index n{};
};

template <typename Scalar>
struct LineFit {
    Scalar intercept{};
    Scalar slope{};
    Scalar se_intercept{};  // sigma = 1
    Scalar se_slope{};      // sigma = 1
    Scalar rss_w{};
    Eigen::Index n{};
};

template <typename Scalar>
struct MultiFit {
    Eigen::Vector<Scalar, Eigen::Dynamic> beta;
    Eigen::Vector<Scalar, Eigen::Dynamic> se;  // sigma = 1
    Scalar rss_w{};
    Eigen::Index n{};
    Eigen::Index rank{};
};

// WLS of y on x through the origin, weights w. Solved by Householder QR on the
// sqrt(w)-scaled design rather than the textbook normal-equations sums.
template <class DX, class DY, class DW>
OriginFit<typename DX::Scalar> wls_origin(const Eigen::MatrixBase<DX>& x,
                                          const Eigen::MatrixBase<DY>& y,
                                          const Eigen::MatrixBase<DW>& w) {
    using Scalar = typename DX::Scalar;
    using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;
    const Eigen::Index n = x.size();
    if (n < 1 || y.size() != n || w.size() != n)
        throw std::invalid_argument("wls_origin: size mismatch or empty input");
    Vec sw = w.derived().array().sqrt();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> a = x.derived().array() * sw.array();
    Vec ys = y.derived().array() * sw.array();
    Eigen::ColPivHouseholderQR<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> qr(a);
    if (qr.rank() < 1) throw std::invalid_argument("wls_origin: zero design column");
    Vec coef = qr.solve(ys);
    OriginFit<Scalar> fit;
    fit.beta = coef(0);
    fit.se = Scalar(1) / a.norm();
    fit.rss_w = (ys - a * coef(0)).squaredNorm();
    fit.n = n;
    return fit;
}

// WLS of y on [1, x] with weights w.
template <class DX, class DY, class DW>
LineFit<typename DX::Scalar> wls_line(const Eigen::MatrixBase<DX>& x,
                                      const Eigen::MatrixBase<DY>& y,
                                      const Eigen::MatrixBase<DW>& w) {
    using Scalar = typename DX::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;
    const Eigen::Index n = x.size();
    if (n < 2 || y.size() != n || w.size() != n)
        throw std::invalid_argument("wls_line: need at least 2 points");
    Vec sw = w.derived().array().sqrt();
    Mat X(n, 2);
    X.col(0) = sw;
    X.col(1) = x.derived().array() * sw.array();
    Vec ys = y.derived().array() * sw.array();
    Eigen::ColPivHouseholderQR<Mat> qr(X);
    if (qr.rank() < 2) throw std::invalid_argument("wls_line: degenerate design");
    Vec coef = qr.solve(ys);
    // (X'X)^-1 from the R factor, undoing the column pivoting
    Mat R = qr.matrixR().template topLeftCorner<2, 2>().template triangularView<Eigen::Upper>();
    Mat Rinv = R.inverse();
    Mat cov = qr.colsPermutation() * (Rinv * Rinv.transpose()) *
              qr.colsPermutation().transpose();
    LineFit<Scalar> fit;
    fit.intercept = coef(0);
    fit.slope = coef(1);
    fit.se_intercept = std::sqrt(cov(0, 0));
    fit.se_slope = std::sqrt(cov(1, 1));
    fit.rss_w = (ys - X * coef).squaredNorm();
    fit.n = n;
    return fit;
}

// WLS of y on the columns of X (no intercept) with weights w.
// Throws on rank deficiency; callers screen inert (all-zero) columns first.
template <class DXM, class DY, class DW>
MultiFit<typename DXM::Scalar> wls_multi(const Eigen::MatrixBase<DXM>& X,
                                         const Eigen::MatrixBase<DY>& y,
                                         const Eigen::MatrixBase<DW>& w) {
    using Scalar = typename DXM::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;
    const Eigen::Index n = X.rows();
    const Eigen::Index k = X.cols();
    if (n <= k || k < 1) throw std::invalid_argument("wls_multi: need more rows than columns");
    if (y.size() != n || w.size() != n) throw std::invalid_argument("wls_multi: size mismatch");
    Vec sw = w.derived().array().sqrt();
    Mat Xs = X.derived().array().colwise() * sw.array();
    Vec ys = y.derived().array() * sw.array();
    Eigen::ColPivHouseholderQR<Mat> qr(Xs);
    if (qr.rank() < k) throw std::invalid_argument("collinear exposures");
    Vec coef = qr.solve(ys);
    Mat R = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    Mat Rinv = R.inverse();
    Mat cov = qr.colsPermutation() * (Rinv * Rinv.transpose()) *
              qr.colsPermutation().transpose();
    MultiFit<Scalar> fit;
    fit.beta = coef;
    fit.se = cov.diagonal().array().sqrt();
    fit.rss_w = (ys - Xs * coef).squaredNorm();
    fit.n = n;
    fit.rank = qr.rank();
    return fit;
}

}  // namespace mrtk::stats
