#include "ks/vec3.hpp"

#include <cmath>
#include <string>

namespace ks {

double sqrt_clamped(double v, double clamp) {
    if (!std::isfinite(v)) {
        throw NumericDomainError("sqrt_clamped: non-finite argument");
    }
    if (v < 0.0) {
        if (v >= -clamp) {
            return 0.0;
        }
        throw NumericDomainError("sqrt_clamped: argument " + std::to_string(v) +
                                 " below clamp window");
    }
    return std::sqrt(v);
}

Vector3 normalized(const Vector3& v) {
    if (!is_finite(v)) {
        throw NumericDomainError("normalized: non-finite vector");
    }
    const double n = norm(v);
    if (n < 1e-12) {
        throw NumericDomainError("normalized: zero-length vector");
    }
    return v * (1.0 / n);
}

Ray Ray::from(const Vector3& v) {
    Vector3 u = normalized(v);
    int lead = 0;
    double best = std::fabs(u.x);
    for (int i = 1; i < 3; ++i) {
        const double m = std::fabs(u[i]);
        if (m > best) {
            best = m;
            lead = i;
        }
    }
    if (u[lead] < 0.0) {
        u = -u;
    }
    return Ray(u);
}

Matrix3 Matrix3::from_rows(const Vector3& r0, const Vector3& r1, const Vector3& r2) {
    Matrix3 m;
    const Vector3 rows[3] = {r0, r1, r2};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            m.at(r, c) = rows[r][c];
        }
    }
    return m;
}

Matrix3 Matrix3::from_columns(const Vector3& c0, const Vector3& c1, const Vector3& c2) {
    return from_rows(c0, c1, c2).transposed();
}

Matrix3 Matrix3::transposed() const {
    Matrix3 t;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            t.at(r, c) = at(c, r);
        }
    }
    return t;
}

Matrix3 Matrix3::operator*(const Matrix3& o) const {
    Matrix3 p;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) {
                s += at(r, k) * o.at(k, c);
            }
            p.at(r, c) = s;
        }
    }
    return p;
}

Vector3 apply(const Matrix3& m, const Vector3& v) {
    return {dot(m.row(0), v), dot(m.row(1), v), dot(m.row(2), v)};
}

bool is_orthogonal(const Matrix3& m, double tol) {
    const Matrix3 p = m * m.transposed();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            const double want = (r == c) ? 1.0 : 0.0;
            if (std::fabs(p.at(r, c) - want) > tol) {
                return false;
            }
        }
    }
    return true;
}

Matrix3 canonical_pair_basis(const Ray& a, const Ray& b, double tol) {
    const double d = dot(a.vec(), b.vec());
    const double p = std::fabs(d);
    if (p <= tol || p >= 1.0 - tol) {
        throw DegeneratePairError("canonical_pair_basis: overlap " + std::to_string(p) +
                                  " is degenerate");
    }
    const Vector3 bs = (d >= 0.0) ? b.vec() : -b.vec();
    const Vector3 e1 = a.vec();
    const Vector3 e2 = normalized(bs - e1 * p);
    const Vector3 e3 = cross(e1, e2);
    return Matrix3::from_rows(e1, e2, e3);
}

} // namespace ks
