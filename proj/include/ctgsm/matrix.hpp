#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ctgsm {

// Dense row-major matrix of doubles. The only heavy primitive in the
// project; products are row-parallelized, which keeps results bit-identical
// to the serial loop.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& values() const { return data_; }
    std::vector<double>& values() { return data_; }

    bool operator==(const Matrix& other) const = default;

    // select rows by index, preserving order
    Matrix take_rows(std::span<const std::size_t> indices) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C = A (n x k) * B (k x m)
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T (k x n -> n x k transposed view) * B: A is (k x n), result (n x m)
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// C = A (n x k) * B^T where B is (m x k), result (n x m)
Matrix matmul_nt(const Matrix& a, const Matrix& b);

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace ctgsm
