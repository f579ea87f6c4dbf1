#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace palmmark {

/// Small dense row-major square matrix.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) {
            m(i, i) = 1.0;
        }
        return m;
    }

    static Matrix diagonal(const std::vector<double>& d) {
        Matrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            m(i, i) = d[i];
        }
        return m;
    }

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    const std::vector<double>& data() const { return data_; }

    bool is_symmetric() const {
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if ((*this)(i, j) != (*this)(j, i)) {
                    return false;
                }
            }
        }
        return true;
    }

    double max_abs() const {
        double m = 0;
        for (double v : data_) {
            m = std::max(m, std::abs(v));
        }
        return m;
    }

    /// Induced 1-norm (max column sum).
    double norm1() const {
        double best = 0;
        for (std::size_t j = 0; j < n_; ++j) {
            double col = 0;
            for (std::size_t i = 0; i < n_; ++i) {
                col += std::abs((*this)(i, j));
            }
            best = std::max(best, col);
        }
        return best;
    }

    Matrix& operator+=(const Matrix& o) {
        require_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) {
            data_[k] += o.data_[k];
        }
        return *this;
    }

    Matrix& operator*=(double s) {
        for (double& v : data_) {
            v *= s;
        }
        return *this;
    }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        a.require_same(b);
        Matrix c(a.n_);
        for (std::size_t i = 0; i < a.n_; ++i) {
            for (std::size_t k = 0; k < a.n_; ++k) {
                const double aik = a(i, k);
                for (std::size_t j = 0; j < a.n_; ++j) {
                    c(i, j) += aik * b(k, j);
                }
            }
        }
        return c;
    }

    friend Matrix operator*(double s, Matrix m) {
        m *= s;
        return m;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    void require_same(const Matrix& o) const {
        if (o.n_ != n_) {
            throw std::invalid_argument("matrix size mismatch");
        }
    }

    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Largest entrywise |a - b|.
inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0;
    for (std::size_t k = 0; k < a.data().size(); ++k) {
        m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
    }
    return m;
}

/// xᵀ A y
inline double bilinear(const std::vector<double>& x, const Matrix& a, const std::vector<double>& y) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double row = 0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            row += a(i, j) * y[j];
        }
        s += x[i] * row;
    }
    return s;
}

}  // namespace palmmark
