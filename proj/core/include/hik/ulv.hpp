#pragma once

#include <vector>

#include "hik/hss.hpp"
#include "hik/types.hpp"

namespace hik {

/// ULV factorization of K_HSS + lambda I.
///
/// At every node an orthogonal transform from the left compresses the row basis
/// into its last r rows; an LQ step on the remaining rows then eliminates m - r
/// unknowns locally. The r x r remainders of two siblings are merged into the
/// parent system, and the root system is solved with pivoted LU. The object is
/// self-contained and immutable; solves may run concurrently.
class UlvFactorization {
public:
    Index n() const { return n_; }
    double lambda() const { return lambda_; }

    /// Solves (K_HSS + lambda I) X = B for one or more right-hand sides.
    Matrix solve(const Matrix& b) const;

    friend UlvFactorization ulv_factor(const HssMatrix&, double);

private:
    struct NodeFactor {
        Index m = 0;        ///< size of the node's system
        Index eliminated = 0;
        Matrix omega;       ///< m x m left transform (empty means identity)
        Matrix w;           ///< m x m right transform Z with x = Z z (empty means identity)
        Matrix lower;       ///< eliminated x eliminated lower triangle
        Matrix e1;          ///< (m - eliminated) x eliminated coupling after elimination
        Matrix v1;          ///< eliminated x r rows of W V that multiply z1
        Matrix vtilde;      ///< transfer matrix for the known-projection recursion
        Matrix ub_lr, ub_rl; ///< Ured_left B_lr and Ured_right B_rl (internal nodes)
        Index reduced = 0;  ///< size passed to the parent (m - eliminated)
        Index rank = 0;     ///< columns of the node's basis
    };

    Index n_ = 0;
    double lambda_ = 0.0;
    ClusterTree tree_;
    std::vector<NodeFactor> factors_;
    Eigen::PartialPivLU<Matrix> root_lu_;
};

UlvFactorization ulv_factor(const HssMatrix& hm, double lambda);

inline Matrix ulv_solve(const UlvFactorization& f, const Matrix& b) { return f.solve(b); }

/// Refactors the same compressed operator at a new diagonal shift. No recompression
/// happens; lambda only enters at factorization time.
inline UlvFactorization shift_diagonal(const HssMatrix& hm, double new_lambda) { return ulv_factor(hm, new_lambda); }

} // namespace hik
