#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "lmsfd/rng.hpp"

namespace lmsfd {

// Dense row-major matrix of 64-bit floats.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;
    std::string shape_str() const;

    void fill(double v);

    static Matrix randn(std::size_t rows, std::size_t cols, Rng& rng, double stddev);
    static Matrix filled(std::size_t rows, std::size_t cols, double v);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[noreturn]] void throw_shape_error(const std::string& op, const Matrix& a, const Matrix& b);

// Value-level linear algebra over the active kernel table.

// op(A) * op(B) where op transposes when the flag is set. trans_a && trans_b
// is unsupported (nothing in this codebase needs it).
Matrix mat_mul(const Matrix& a, const Matrix& b, bool trans_a = false, bool trans_b = false);
// C += op(A) * op(B); shapes must already agree.
void mat_mul_acc(Matrix& c, const Matrix& a, const Matrix& b, bool trans_a = false,
                 bool trans_b = false);
Matrix mat_add(const Matrix& a, const Matrix& b);
Matrix mat_sub(const Matrix& a, const Matrix& b);
Matrix mat_hadamard(const Matrix& a, const Matrix& b);
Matrix mat_scale(const Matrix& a, double s);
// y += a * x
void mat_axpy(Matrix& y, double a, const Matrix& x);
Matrix mat_transpose(const Matrix& a);
double mat_sum(const Matrix& a);
// max_ij |a_ij - b_ij|
double max_abs_diff(const Matrix& a, const Matrix& b);
// true iff every element is bitwise identical
bool bit_equal(const Matrix& a, const Matrix& b);

}  // namespace lmsfd
