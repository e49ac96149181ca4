#pragma once

#include <array>
#include <cmath>

#include "ks/errors.hpp"

namespace ks {

struct Tolerances {
    double unit = 1e-10;  // unit-norm and parallelism checks
    double orth = 1e-9;   // context orthogonality checks
    double clamp = 1e-12; // sqrt arguments this far below zero are treated as zero
};

struct Vector3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vector3 operator+(const Vector3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vector3 operator-(const Vector3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vector3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vector3 operator-() const { return {-x, -y, -z}; }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline double dot(const Vector3& a, const Vector3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vector3 cross(const Vector3& a, const Vector3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vector3& v) { return std::sqrt(dot(v, v)); }

inline bool is_finite(const Vector3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Negative arguments within `clamp` of zero are rounding residue and map to 0;
// anything further below is a genuine domain violation.
double sqrt_clamped(double v, double clamp = Tolerances{}.clamp);

Vector3 normalized(const Vector3& v);

// A ray is a unit vector with the sign fixed so that the largest-magnitude
// component is positive (ties broken by the first such index). Two opposite
// unit vectors name the same projection observable and canonicalize equally.
class Ray {
  public:
    Ray() : v_{1.0, 0.0, 0.0} {}

    static Ray from(const Vector3& v);

    const Vector3& vec() const { return v_; }

  private:
    explicit Ray(const Vector3& v) : v_(v) {}
    Vector3 v_;
};

// Absolute value of the dot product: the overlap |<a|b>| of the two rays.
inline double inner(const Ray& a, const Ray& b) {
    return std::fabs(dot(a.vec(), b.vec()));
}

inline bool same_ray(const Ray& a, const Ray& b, double tol = Tolerances{}.unit) {
    const Vector3 d = a.vec() - b.vec();
    return norm(d) <= tol;
}

class Matrix3 {
  public:
    Matrix3() : m_{{1, 0, 0, 0, 1, 0, 0, 0, 1}} {}

    static Matrix3 from_rows(const Vector3& r0, const Vector3& r1, const Vector3& r2);
    static Matrix3 from_columns(const Vector3& c0, const Vector3& c1, const Vector3& c2);

    double at(int r, int c) const { return m_[3 * r + c]; }
    double& at(int r, int c) { return m_[3 * r + c]; }

    Vector3 row(int r) const { return {at(r, 0), at(r, 1), at(r, 2)}; }
    Matrix3 transposed() const;
    Matrix3 operator*(const Matrix3& o) const;

  private:
    std::array<double, 9> m_;
};

Vector3 apply(const Matrix3& m, const Vector3& v);

bool is_orthogonal(const Matrix3& m, double tol = Tolerances{}.orth);

// Rotation M with M a = (1,0,0) and M b = +-(p,q,0), where p = inner(a,b) and
// q = sqrt(1-p^2) > 0. The image of b is (p,q,0) exactly when dot(a,b) >= 0;
// as rays the two signs are the same observable. Throws DegeneratePairError
// when a and b are parallel or orthogonal within tol.
Matrix3 canonical_pair_basis(const Ray& a, const Ray& b, double tol = Tolerances{}.unit);

} // namespace ks
