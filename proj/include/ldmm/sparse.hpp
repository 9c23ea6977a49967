#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ldmm/error.hpp"

namespace ldmm {

/// One stored entry of a sparse row.
struct SparseEntry {
    std::uint32_t col;
    double value;
};

/// Square sparse matrix in compressed-row form with sorted, unique columns.
///
/// Used for the patch affinity matrix and the translated weight matrix; both
/// are symmetric, nonnegative and carry no diagonal, but the container itself
/// does not enforce that (see `is_symmetric`).
class SparseWeights {
public:
    SparseWeights() : row_ptr_(1, 0) {}
    explicit SparseWeights(std::size_t n) : n_(n), row_ptr_(n + 1, 0) {}

    /// Builds from per-row entry lists. Duplicate columns within a row are
    /// summed in their given order; entries that end up exactly zero are kept.
    static SparseWeights from_rows(std::size_t n_cols, std::vector<std::vector<SparseEntry>> rows)
    {
        SparseWeights w;
        w.n_ = rows.size();
        w.n_cols_ = n_cols;
        w.row_ptr_.assign(rows.size() + 1, 0);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            merge_row(rows[i]);
            w.row_ptr_[i + 1] = w.row_ptr_[i] + rows[i].size();
        }
        w.entries_.reserve(w.row_ptr_.back());
        for (auto& r : rows) {
            for (const auto& e : r) {
                if (e.col >= n_cols) throw IndexError("sparse column out of range");
                w.entries_.push_back(e);
            }
            std::vector<SparseEntry>().swap(r);
        }
        return w;
    }

    static SparseWeights from_rows(std::vector<std::vector<SparseEntry>> rows)
    {
        const std::size_t n = rows.size();
        return from_rows(n, std::move(rows));
    }

    /// Builds row by row from `fill(i, out)`, which appends the (unsorted,
    /// possibly duplicated) entries of row i. Rows are generated in parallel in
    /// blocks and merged with `merge_row`, so the result does not depend on the
    /// thread schedule.
    template <class RowFn>
    static SparseWeights generate(std::size_t n_rows, std::size_t n_cols, RowFn&& fill,
                                  std::size_t block = 2048)
    {
        SparseWeights w;
        w.n_ = n_rows;
        w.n_cols_ = n_cols;
        w.row_ptr_.assign(n_rows + 1, 0);
        std::vector<std::vector<SparseEntry>> buf(std::min(block, n_rows));
        for (std::size_t start = 0; start < n_rows; start += block) {
            const std::size_t stop = std::min(n_rows, start + block);
#pragma omp parallel for schedule(dynamic, 16)
            for (std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(start); ii < static_cast<std::ptrdiff_t>(stop); ++ii) {
                auto& r = buf[static_cast<std::size_t>(ii) - start];
                r.clear();
                fill(static_cast<std::size_t>(ii), r);
                merge_row(r);
            }
            for (std::size_t i = start; i < stop; ++i) {
                const auto& r = buf[i - start];
                for (const auto& e : r)
                    if (e.col >= n_cols) throw IndexError("sparse column out of range");
                w.entries_.insert(w.entries_.end(), r.begin(), r.end());
                w.row_ptr_[i + 1] = w.entries_.size();
            }
        }
        w.entries_.shrink_to_fit();
        return w;
    }

    /// Sorts by column and sums duplicates, keeping first-seen summation order.
    static void merge_row(std::vector<SparseEntry>& r)
    {
        std::stable_sort(r.begin(), r.end(), [](const SparseEntry& a, const SparseEntry& b) {
            return a.col < b.col;
        });
        std::size_t out = 0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (out > 0 && r[out - 1].col == r[k].col)
                r[out - 1].value += r[k].value;
            else
                r[out++] = r[k];
        }
        r.resize(out);
    }

    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return n_cols_ == npos ? n_ : n_cols_; }
    std::size_t nnz() const noexcept { return entries_.size(); }

    std::span<const SparseEntry> row(std::size_t i) const
    {
        return {entries_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }

    /// Stored value or 0.
    double value(std::size_t i, std::size_t j) const
    {
        const auto r = row(i);
        auto it = std::lower_bound(r.begin(), r.end(), j,
                                   [](const SparseEntry& e, std::size_t c) { return e.col < c; });
        return (it != r.end() && it->col == j) ? it->value : 0.0;
    }

    double row_sum(std::size_t i) const
    {
        double s = 0.0;
        for (const auto& e : row(i)) s += e.value;
        return s;
    }

    double total() const
    {
        double s = 0.0;
        for (const auto& e : entries_) s += e.value;
        return s;
    }

    std::size_t max_row_nnz() const
    {
        std::size_t m = 0;
        for (std::size_t i = 0; i < n_; ++i) m = std::max(m, row_ptr_[i + 1] - row_ptr_[i]);
        return m;
    }

    /// Exact structural and numerical symmetry.
    bool is_symmetric() const
    {
        if (rows() != cols()) return false;
        for (std::size_t i = 0; i < n_; ++i)
            for (const auto& e : row(i)) {
                const auto r = row(e.col);
                auto it = std::lower_bound(r.begin(), r.end(), i, [](const SparseEntry& a, std::size_t c) {
                    return a.col < c;
                });
                if (it == r.end() || it->col != i || it->value != e.value) return false;
            }
        return true;
    }

    /// y = W x
    void multiply(std::span<const double> x, std::span<double> y) const
    {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_); ++i) {
            double s = 0.0;
            for (const auto& e : row(static_cast<std::size_t>(i))) s += e.value * x[e.col];
            y[static_cast<std::size_t>(i)] = s;
        }
    }

    friend bool operator==(const SparseWeights& a, const SparseWeights& b)
    {
        if (a.n_ != b.n_ || a.cols() != b.cols() || a.row_ptr_ != b.row_ptr_) return false;
        for (std::size_t k = 0; k < a.entries_.size(); ++k)
            if (a.entries_[k].col != b.entries_[k].col || a.entries_[k].value != b.entries_[k].value)
                return false;
        return true;
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t n_ = 0;
    std::size_t n_cols_ = npos;
    std::vector<std::size_t> row_ptr_;
    std::vector<SparseEntry> entries_;
};

} // namespace ldmm
