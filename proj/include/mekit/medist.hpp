#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mekit/matfun.hpp"

namespace mekit {

// Rational Laplace transform p(s)/q(s) in ascending powers of s.
// p = {x1, ..., xk} means p(s) = x1 + x2 s + ... + xk s^(k-1).
// q = {y1, ..., yd} means q(s) = y1 + y2 s + ... + yd s^(d-1) + s^d (monic, leading 1 omitted).
struct RationalLT {
    std::vector<double> p;
    std::vector<double> q;

    std::size_t degree() const { return q.size(); }
    // p(s)/q(s) by Horner evaluation.
    cplx evaluate(cplx s) const;
};

// Throws ConstructionError when deg p >= deg q or p1 != q1.
void check_rational_lt(const RationalLT& lt);

// Matrix-exponential distribution with density x e^{tY} z on [0, inf).
class MEDist {
public:
    MEDist(RowVector x, Matrix y, Vector z);

    const RowVector& x() const { return x_; }
    const Matrix& Y() const { return y_; }
    const Vector& z() const { return z_; }
    Eigen::Index degree() const { return y_.rows(); }

    // The rational transform this triple was built from, when known.
    const std::optional<RationalLT>& source_lt() const { return lt_; }
    MEDist with_source(RationalLT lt) const;

private:
    RowVector x_;
    Matrix y_;
    Vector z_;
    std::optional<RationalLT> lt_;
};

// Companion matrix S - e_d y with superdiagonal ones and last row -y.
Matrix companion(const std::vector<double>& q);

MEDist from_rational_lt(const RationalLT& lt);
// Same construction with only structural checks; used to report on invalid input.
MEDist from_rational_lt_unchecked(const RationalLT& lt);
MEDist from_product_form(const std::vector<RationalLT>& factors);

// Y^I = [[0, x], [0, Y]] so that the cdf is e1^T e^{tY^I} [0; z].
Matrix augmented_generator(const MEDist& d);

enum class CdfPath { augmented, classic };

double pdf(const MEDist& d, double t);
double cdf(const MEDist& d, double t, CdfPath path = CdfPath::augmented);
cplx lt(const MEDist& d, cplx s);
double moment(const MEDist& d, int k);
double mean(const MEDist& d);

// (x/S, Y/S, z) with no precondition on the input mean.
MEDist scale_by(const MEDist& d, double s);
// Mean scaling of a unit-mean distribution; throws PreconditionError otherwise.
MEDist scale_mean(const MEDist& d, double s);
// Rescales to unit mean.
MEDist normalize_mean(const MEDist& d);

// 40 / (smallest |Re lambda|) over the eigenvalues of Y; throws DomainError if a mode does not decay.
double decay_horizon(const MEDist& d);

struct Check {
    bool pass = true;
    std::string detail;
};

struct ValidationReport {
    Check lt_at_zero_is_one;
    Check nonneg_on_grid;
    Check cdf_limit_one;
    Check p1_eq_q1;

    bool all_pass() const {
        return lt_at_zero_is_one.pass && nonneg_on_grid.pass && cdf_limit_one.pass && p1_eq_q1.pass;
    }
    std::vector<std::string> failures() const;
};

ValidationReport validate(const MEDist& d);

} // namespace mekit
