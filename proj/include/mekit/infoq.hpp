#pragma once

#include <string>
#include <vector>

#include "mekit/medist.hpp"

namespace mekit {

struct EntropyResult {
    double value = 0.0;       // nats
    double limit_value = 0.0; // (1/theta) ln int f^{1-theta} at theta = 1e-4
    double quad_error = 0.0;
    std::vector<std::string> notes;
};
// Differential entropy -int f ln f by quadrature, with the small-theta limit as a cross-check.
EntropyResult entropy_numeric(const MEDist& d);
// (1/theta) ln int f^{1-theta}, which tends to the entropy as theta -> 0.
double entropy_limit(const MEDist& d, double theta);

struct MutualInformation {
    double value = 0.0;
    double bound = 0.0; // 1 + ln(Sx + Sw) - h(w), the exponential maximum-entropy bound
    double h_y_um = 0.0;
    double h_w_um = 0.0;
};
// Mutual information h(y) - h(w) of y = x + w for independent ME-distributed x and w.
MutualInformation mi_additive_channel(const MEDist& dx, const MEDist& dw);

struct LloydMaxResult {
    std::vector<double> thresholds; // interior cell boundaries, size M - 1
    std::vector<double> centroids;  // size M
    double mse = 0.0;
    int iterations = 0;
    std::vector<double> mse_history;
    std::vector<std::string> notes;
};
LloydMaxResult lloyd_max(const MEDist& d, int m, double tol = 1e-10, int max_iter = 200000);
// Mean squared error of an arbitrary quantizer (thresholds, reconstruction points).
double quantizer_mse(const MEDist& d, const std::vector<double>& thresholds, const std::vector<double>& centroids);

struct PanterDiteResult {
    double mse = 0.0;
    double cube_root_integral = 0.0;
    double quad_integral = 0.0;
    bool decomposed = false;
};
// (1/(12 M^2)) (int f^{1/3})^3 with the integral by quadrature.
PanterDiteResult panter_dite_mse(const MEDist& d, int m);
// Same with a supplied triple satisfying f^{1/3}(t) = xc e^{t Yc} zc; the exact value -xc Yc^{-1} zc
// is used and must match quadrature within 1e-8 (PreconditionError otherwise).
PanterDiteResult panter_dite_mse(const MEDist& d, int m, const RowVector& xc, const Matrix& yc, const Vector& zc);

// Type I: c x e^{t^2 Y} z on the real line, c = 1 / (sqrt(pi) x (-Y)^{-1/2} z).
class TypeI {
public:
    TypeI(RowVector x, Matrix y, Vector z);
    double c() const { return c_; }
    double pdf(double t) const;
    double moment(int n) const;

private:
    RowVector x_;
    Matrix y_;
    Vector z_;
    double c_;
};

// Type II: (1/pi) x e^{(u^2 + v^2) Y} z on the plane; requires x (-Y)^{-1} z = 1.
class TypeII {
public:
    TypeII(RowVector x, Matrix y, Vector z);
    double pdf(double u, double v) const;
    double moment(int n, int m) const;
    double marginal(double u) const;

private:
    RowVector x_;
    Matrix y_;
    Vector z_;
    Matrix inv_sqrt_; // (-Y)^{-1/2}
};

// Type III: 2 t x e^{t^2 Y} z on t > 0; requires x (-Y)^{-1} z = 1.
class TypeIII {
public:
    TypeIII(RowVector x, Matrix y, Vector z);
    double pdf(double t) const;
    double moment(int n) const;

private:
    RowVector x_;
    Matrix y_;
    Vector z_;
};

} // namespace mekit
