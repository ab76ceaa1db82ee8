#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "rbc/bits.hpp"
#include "rbc/errors.hpp"

namespace rbc::gf2 {

// Dense binary matrix with rows packed into 64-bit words.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), words_((cols + 63) / 64), data_(rows * words_, 0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    bool get(std::size_t r, std::size_t c) const noexcept {
        return (data_[r * words_ + c / 64] >> (c % 64)) & 1u;
    }
    void set(std::size_t r, std::size_t c, bool v = true) noexcept {
        auto& w = data_[r * words_ + c / 64];
        const std::uint64_t bit = std::uint64_t{1} << (c % 64);
        w = v ? (w | bit) : (w & ~bit);
    }

    void xor_row_into(std::size_t src, std::size_t dst) noexcept {
        for (std::size_t w = 0; w < words_; ++w) data_[dst * words_ + w] ^= data_[src * words_ + w];
    }
    void swap_rows(std::size_t a, std::size_t b) noexcept {
        for (std::size_t w = 0; w < words_; ++w) std::swap(data_[a * words_ + w], data_[b * words_ + w]);
    }

    std::size_t row_weight(std::size_t r) const noexcept {
        std::size_t n = 0;
        for (std::size_t w = 0; w < words_; ++w) n += static_cast<std::size_t>(__builtin_popcountll(data_[r * words_ + w]));
        return n;
    }
    std::size_t col_weight(std::size_t c) const noexcept {
        std::size_t n = 0;
        for (std::size_t r = 0; r < rows_; ++r) n += get(r, c);
        return n;
    }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c)
                if (get(r, c)) t.set(c, r);
        return t;
    }

    Matrix permute_columns(const std::vector<std::size_t>& source_of) const {
        Matrix out(rows_, cols_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c)
                if (get(r, source_of[c])) out.set(r, c);
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> data_;
};

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("matrix dimensions do not agree");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            bool acc = false;
            for (std::size_t l = 0; l < a.cols(); ++l) acc ^= a.get(i, l) && b.get(l, j);
            out.set(i, j, acc);
        }
    return out;
}

// v * M for a row vector v.
inline BitString row_times(const BitString& v, const Matrix& m) {
    if (v.size() != m.rows()) throw InvalidArgument("vector length does not match matrix rows");
    BitString out(m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        if (v[r])
            for (std::size_t c = 0; c < m.cols(); ++c) out[c] ^= static_cast<Bit>(m.get(r, c));
    return out;
}

// M * v^T, e.g. the syndrome of a received word.
inline BitString times_column(const Matrix& m, const BitString& v) {
    if (v.size() != m.cols()) throw InvalidArgument("vector length does not match matrix columns");
    BitString out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        Bit acc = 0;
        for (std::size_t c = 0; c < m.cols(); ++c) acc ^= static_cast<Bit>(m.get(r, c) & v[c]);
        out[r] = acc;
    }
    return out;
}

struct Echelon {
    Matrix reduced;                    // reduced row echelon form, zero rows last
    std::vector<std::size_t> pivots;   // pivot column of each nonzero row
};

inline Echelon row_reduce(Matrix m) {
    Echelon e;
    std::size_t row = 0;
    for (std::size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
        std::size_t pivot = row;
        while (pivot < m.rows() && !m.get(pivot, col)) ++pivot;
        if (pivot == m.rows()) continue;
        m.swap_rows(pivot, row);
        for (std::size_t r = 0; r < m.rows(); ++r)
            if (r != row && m.get(r, col)) m.xor_row_into(row, r);
        e.pivots.push_back(col);
        ++row;
    }
    e.reduced = std::move(m);
    return e;
}

inline std::size_t rank(const Matrix& m) { return row_reduce(m).pivots.size(); }

}  // namespace rbc::gf2
