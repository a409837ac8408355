#include "lmsfd/matrix.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "lmsfd/errors.hpp"
#include "lmsfd/kernels.hpp"

namespace lmsfd {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        std::ostringstream os;
        os << "matrix data length " << data_.size() << " does not match shape " << rows_
           << "x" << cols_;
        throw ShapeError(os.str());
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw ShapeError("ragged initializer list for matrix");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Matrix::shape_str() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
}

void Matrix::fill(double v) {
    for (double& x : data_) x = v;
}

Matrix Matrix::randn(std::size_t rows, std::size_t cols, Rng& rng, double stddev) {
    Matrix m(rows, cols);
    for (double& x : m.data_) x = rng.gaussian() * stddev;
    return m;
}

Matrix Matrix::filled(std::size_t rows, std::size_t cols, double v) {
    Matrix m(rows, cols);
    m.fill(v);
    return m;
}

void throw_shape_error(const std::string& op, const Matrix& a, const Matrix& b) {
    throw ShapeError(op + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

namespace {

struct MulDims {
    std::size_t m, n, k;
};

MulDims mul_dims(const Matrix& a, const Matrix& b, bool ta, bool tb, const char* op) {
    if (ta && tb) {
        throw ShapeError(std::string(op) + ": double-transposed product is unsupported");
    }
    const std::size_t m = ta ? a.cols() : a.rows();
    const std::size_t ka = ta ? a.rows() : a.cols();
    const std::size_t kb = tb ? b.cols() : b.rows();
    const std::size_t n = tb ? b.rows() : b.cols();
    if (ka != kb) throw_shape_error(op, a, b);
    return {m, n, ka};
}

void gemm(Matrix& c, const Matrix& a, const Matrix& b, bool ta, bool tb, bool accumulate) {
    const auto& kt = kernels::active();
    const MulDims d = mul_dims(a, b, ta, tb, "matmul");
    if (ta) {
        kt.gemm_tn(c.data(), a.data(), b.data(), d.m, d.n, d.k, accumulate);
    } else if (tb) {
        kt.gemm_nt(c.data(), a.data(), b.data(), d.m, d.n, d.k, accumulate);
    } else {
        kt.gemm_nn(c.data(), a.data(), b.data(), d.m, d.n, d.k, accumulate);
    }
}

}  // namespace

Matrix mat_mul(const Matrix& a, const Matrix& b, bool trans_a, bool trans_b) {
    const MulDims d = mul_dims(a, b, trans_a, trans_b, "matmul");
    Matrix c(d.m, d.n);
    gemm(c, a, b, trans_a, trans_b, false);
    return c;
}

void mat_mul_acc(Matrix& c, const Matrix& a, const Matrix& b, bool trans_a, bool trans_b) {
    const MulDims d = mul_dims(a, b, trans_a, trans_b, "matmul");
    if (c.rows() != d.m || c.cols() != d.n) {
        throw ShapeError("matmul: accumulator shape " + c.shape_str() + " does not match product");
    }
    gemm(c, a, b, trans_a, trans_b, true);
}

Matrix mat_add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw_shape_error("add", a, b);
    Matrix out(a.rows(), a.cols());
    kernels::active().add(out.data(), a.data(), b.data(), a.size());
    return out;
}

Matrix mat_sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw_shape_error("sub", a, b);
    Matrix out(a.rows(), a.cols());
    kernels::active().sub(out.data(), a.data(), b.data(), a.size());
    return out;
}

Matrix mat_hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw_shape_error("hadamard", a, b);
    Matrix out(a.rows(), a.cols());
    kernels::active().mul(out.data(), a.data(), b.data(), a.size());
    return out;
}

Matrix mat_scale(const Matrix& a, double s) {
    Matrix out(a.rows(), a.cols());
    kernels::active().scale(out.data(), a.data(), s, a.size());
    return out;
}

void mat_axpy(Matrix& y, double a, const Matrix& x) {
    if (!y.same_shape(x)) throw_shape_error("axpy", y, x);
    kernels::active().axpy(y.data(), a, x.data(), x.size());
}

Matrix mat_transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(j, i) = a(i, j);
        }
    }
    return out;
}

double mat_sum(const Matrix& a) {
    return kernels::active().sum(a.data(), a.size());
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw_shape_error("max_abs_diff", a, b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::bit_cast<std::uint64_t>(a.data()[i]) !=
            std::bit_cast<std::uint64_t>(b.data()[i])) {
            return false;
        }
    }
    return true;
}

}  // namespace lmsfd
