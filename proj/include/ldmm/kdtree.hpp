#pragma once

// Exact k-nearest-neighbour search over points stored row-major.
//
// Results are ordered by (squared distance, ordinal), so ties resolve toward the
// lower ordinal and the answer is identical to a brute-force scan that sums the
// squared coordinate differences in axis order.
//
// The tree splits along the principal axes of the cloud, which prunes far
// better than raw coordinates on patch clouds of low intrinsic dimension.
// Rotated coordinates only feed the pruning bounds; candidate distances are
// always computed from the original rows.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ldmm/error.hpp"

namespace ldmm {

struct Neighbor {
    double dist2;
    std::uint32_t index;

    friend bool operator<(const Neighbor& a, const Neighbor& b)
    {
        return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
    }
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

class KdTree {
public:
    /// `points` holds `count` rows of `dim` values; it must outlive the tree.
    KdTree(std::span<const double> points, std::size_t dim, std::size_t leaf_size = 12)
        : pts_(points), dim_(dim), leaf_size_(std::max<std::size_t>(leaf_size, 1))
    {
        if (dim_ == 0 || pts_.size() % dim_ != 0)
            throw InvalidArgument("point buffer is not a whole number of rows");
        n_ = pts_.size() / dim_;
        if (n_ > std::numeric_limits<std::uint32_t>::max())
            throw InvalidArgument("too many points for 32-bit ordinals");
        perm_.resize(n_);
        std::iota(perm_.begin(), perm_.end(), std::uint32_t{0});
        if (n_ > 0) rotate();
        nodes_.reserve(2 * (n_ / leaf_size_ + 1));
        if (n_ > 0) build(0, n_);
    }

    std::size_t size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return dim_; }

    /// The k nearest points to `q`, skipping ordinal `exclude` (pass size() to
    /// skip nothing). Output is sorted ascending.
    void query(std::span<const double> q, std::size_t k, std::size_t exclude,
               std::vector<Neighbor>& out) const
    {
        out.clear();
        if (k == 0 || n_ == 0) return;
        std::vector<double> rq(dim_);
        project(q.data(), rq.data());
        Search s{q, rq, k, exclude, out, std::vector<double>(dim_, 0.0), slack(rq)};
        out.reserve(k + 1);
        descend(0, 0.0, s);
        std::sort_heap(out.begin(), out.end());
    }

private:
    struct Node {
        std::size_t begin, end;
        std::size_t axis;
        double split;
        std::int64_t left = -1, right = -1;
    };

    struct Search {
        std::span<const double> q;
        std::span<const double> rq; // rotated query
        std::size_t k;
        std::size_t exclude;
        std::vector<Neighbor>& heap;
        std::vector<double> off;
        double tol; // rounding allowance on rotated squared distances

        double worst() const
        {
            return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.front().dist2;
        }
    };

    const double* point(std::uint32_t i) const { return pts_.data() + std::size_t{i} * dim_; }
    const double* rotated(std::uint32_t i) const { return rot_.data() + std::size_t{i} * dim_; }

    void rotate()
    {
        const auto d = static_cast<Eigen::Index>(dim_);
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> p(
            pts_.data(), static_cast<Eigen::Index>(n_), d);
        mean_ = p.colwise().mean().transpose();
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
        constexpr Eigen::Index block = 4096;
        for (Eigen::Index r = 0; r < p.rows(); r += block) {
            const Eigen::Index m = std::min(block, p.rows() - r);
            const Eigen::MatrixXd c = p.middleRows(r, m).rowwise() - mean_.transpose();
            cov.selfadjointView<Eigen::Lower>().rankUpdate(c.transpose());
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.selfadjointView<Eigen::Lower>());
        basis_ = es.eigenvectors().rowwise().reverse(); // descending variance
        rot_.resize(n_ * dim_);
        radius_ = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            project(point(static_cast<std::uint32_t>(i)), rot_.data() + i * dim_);
            const Eigen::Map<const Eigen::VectorXd> r(rot_.data() + i * dim_, d);
            radius_ = std::max(radius_, r.norm());
        }
    }

    void project(const double* x, double* out) const
    {
        const auto d = static_cast<Eigen::Index>(dim_);
        Eigen::Map<Eigen::VectorXd>(out, d).noalias() =
            basis_.transpose() * (Eigen::Map<const Eigen::VectorXd>(x, d) - mean_);
    }

    double slack(std::span<const double> rq) const
    {
        const double r = std::max(radius_, Eigen::Map<const Eigen::VectorXd>(rq.data(), rq.size()).norm());
        return 1e-10 * r * r;
    }

    std::size_t build(std::size_t begin, std::size_t end)
    {
        const std::size_t id = nodes_.size();
        nodes_.push_back(Node{begin, end, 0, 0.0});
        if (end - begin <= leaf_size_) return id;

        // Split on the axis of largest spread, at the median.
        std::size_t best_axis = 0;
        double best_spread = -1.0;
        for (std::size_t a = 0; a < dim_; ++a) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::size_t i = begin; i < end; ++i) {
                const double v = rotated(perm_[i])[a];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                best_axis = a;
            }
        }
        if (best_spread <= 0.0) return id; // all points coincide

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin),
                         perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                         perm_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::uint32_t a, std::uint32_t b) {
                             return rotated(a)[best_axis] < rotated(b)[best_axis];
                         });
        nodes_[id].axis = best_axis;
        nodes_[id].split = rotated(perm_[mid])[best_axis];
        const auto l = build(begin, mid);
        const auto r = build(mid, end);
        nodes_[id].left = static_cast<std::int64_t>(l);
        nodes_[id].right = static_cast<std::int64_t>(r);
        return id;
    }

    void scan_leaf(const Node& node, Search& s) const
    {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::uint32_t idx = perm_[i];
            if (idx == s.exclude) continue;
            const double worst = s.worst();
            // Leading principal coordinates carry most of the distance, so the
            // rotated partial sum rejects most candidates after a few terms.
            const double* r = rotated(idx);
            const double cut = worst + s.tol;
            double part = 0.0;
            std::size_t a = 0;
            for (; a < dim_; ++a) {
                const double diff = s.rq[a] - r[a];
                part += diff * diff;
                if (part > cut) break;
            }
            if (a < dim_) continue;
            const double* p = point(idx);
            double d2 = 0.0;
            for (a = 0; a < dim_; ++a) {
                const double diff = s.q[a] - p[a];
                d2 += diff * diff;
            }
            if (d2 > worst) continue;
            const Neighbor cand{d2, idx};
            if (s.heap.size() < s.k) {
                s.heap.push_back(cand);
                std::push_heap(s.heap.begin(), s.heap.end());
            } else if (cand < s.heap.front()) {
                std::pop_heap(s.heap.begin(), s.heap.end());
                s.heap.back() = cand;
                std::push_heap(s.heap.begin(), s.heap.end());
            }
        }
    }

    void descend(std::size_t id, double rd, Search& s) const
    {
        const Node& node = nodes_[id];
        if (node.left < 0) {
            scan_leaf(node, s);
            return;
        }
        const double diff = s.rq[node.axis] - node.split;
        const auto near = static_cast<std::size_t>(diff <= 0.0 ? node.left : node.right);
        const auto far = static_cast<std::size_t>(diff <= 0.0 ? node.right : node.left);
        descend(near, rd, s);

        // Incremental lower bound on the squared distance to the far cell. The
        // allowance covers rounding in the rotation and in the update, so exact
        // ties are never pruned.
        const double old = s.off[node.axis];
        const double far_rd = rd - old * old + diff * diff;
        if (far_rd <= s.worst() + s.tol) {
            s.off[node.axis] = diff;
            descend(far, far_rd, s);
            s.off[node.axis] = old;
        }
    }

    std::span<const double> pts_;
    std::size_t dim_;
    std::size_t n_ = 0;
    std::size_t leaf_size_;
    std::vector<std::uint32_t> perm_;
    std::vector<Node> nodes_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd basis_;
    std::vector<double> rot_;
    double radius_ = 0.0;
};

} // namespace ldmm
