// Dense vector/matrix primitives, shared tolerances, and error type used
// across the library. Everything here is deliberately small and allocation
// oriented: problem sizes are desk scale, so dense row-major storage wins.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddcro {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One place for the numeric tolerances every module shares.
struct Settings {
    double feas_tol = 1e-8;  // primal feasibility, per row
    double gap_tol = 1e-6;   // relative optimality gap
};

// Library error with a stable machine-readable code (the CLI maps codes to
// exit statuses and JSON error objects).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Row-major dense matrix.
struct Mat {
    int rows = 0;
    int cols = 0;
    Vec data;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool empty() const { return rows == 0 || cols == 0; }
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// y = A x
inline Vec matvec(const Mat& a, const Vec& x) {
    Vec y(a.rows, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

// y = A^T x
inline Vec mat_tvec(const Mat& a, const Vec& x) {
    Vec y(a.cols, 0.0);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) y[j] += a(i, j) * x[i];
    return y;
}

inline double norm_inf(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double norm_one(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Solves A x = b with partial-pivot Gaussian elimination. Returns false when
// A is singular to working precision. A and b are taken by value on purpose.
inline bool lu_solve(Mat a, Vec b, Vec& x) {
    const int n = a.rows;
    if (n != a.cols || static_cast<int>(b.size()) != n) return false;
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(a(k, k));
        for (int i = k + 1; i < n; ++i) {
            double v = std::abs(a(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < 1e-12) return false;
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (int i = k + 1; i < n; ++i) {
            double f = a(i, k) / a(k, k);
            if (f == 0.0) continue;
            a(i, k) = 0.0;
            for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }
    x.assign(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return true;
}

// FNV-1a over raw bytes; used for problem fingerprints.
class Fnv1a {
public:
    void add(const void* p, size_t len) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < len; ++i) {
            h_ ^= b[i];
            h_ *= 0x100000001b3ull;
        }
    }
    void add(double v) {
        if (v == 0.0) v = 0.0;  // normalize -0.0
        add(&v, sizeof(v));
    }
    void add(int v) {
        auto w = static_cast<int64_t>(v);
        add(&w, sizeof(w));
    }
    void add(const Vec& v) {
        add(static_cast<int>(v.size()));
        for (double x : v) add(x);
    }
    void add(const Mat& m) {
        add(m.rows);
        add(m.cols);
        for (double x : m.data) add(x);
    }
    uint64_t value() const { return h_; }
    std::string hex() const {
        static const char* d = "0123456789abcdef";
        std::string s(16, '0');
        uint64_t v = h_;
        for (int i = 15; i >= 0; --i) {
            s[i] = d[v & 0xf];
            v >>= 4;
        }
        return s;
    }

private:
    uint64_t h_ = 0xcbf29ce484222325ull;
};

}  // namespace ddcro
