#pragma once

#include "cmcc/types.hpp"

namespace cmcc {

/// Linear constraint C^T W = f together with the cached projection
/// P = I - C (C^T C)^{-1} C^T and minimum-norm feasible point
/// Q = C (C^T C)^{-1} f. Immutable once built; share freely across threads.
class ConstraintSet {
public:
    const Matrix& C() const noexcept { return C_; }
    const Vector& f() const noexcept { return f_; }
    const Matrix& P() const noexcept { return P_; }
    const Vector& Q() const noexcept { return Q_; }
    Eigen::Index M() const noexcept { return C_.rows(); }
    Eigen::Index K() const noexcept { return C_.cols(); }

    /// max |C^T W - f|
    double residual(const Vector& W) const;

private:
    friend ConstraintSet build_constraints(const Matrix& C, const Vector& f);
    ConstraintSet(Matrix C, Vector f, Matrix P, Vector Q)
        : C_(std::move(C)), f_(std::move(f)), P_(std::move(P)), Q_(std::move(Q)) {}

    Matrix C_;
    Vector f_;
    Matrix P_;
    Vector Q_;
};

/// Relative condition-number limit on C^T C beyond which C is treated as
/// rank deficient.
inline constexpr double kMaxGramCondition = 1e12;

/// Throws DimensionError on shape mismatch and ConstraintRankError when
/// C^T C is singular or worse conditioned than kMaxGramCondition.
ConstraintSet build_constraints(const Matrix& C, const Vector& f);

/// True iff max |C^T W - f| <= tol.
bool check_feasible(const Vector& W, const ConstraintSet& cs, double tol);

/// Linear-phase (symmetric weight) constraint for an odd-length array:
/// C = [I; 0; -J] with J the K x K reversal matrix, K = (M - 1) / 2.
Matrix linear_phase_constraint_matrix(Eigen::Index M);

} // namespace cmcc
