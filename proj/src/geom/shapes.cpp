#include "sqz/geom/shapes.hpp"

#include <cmath>
#include <string>

#include "sqz/core/error.hpp"
#include "sqz/core/rng.hpp"

namespace sqz::geom {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ConfigError(std::string("shape: ") + what + " must be positive and finite");
    }
}

void validate_primitive(ShapeKind kind, double a, double b, double c) {
    switch (kind) {
    case ShapeKind::Sphere:
        require_positive(a, "sphere radius");
        break;
    case ShapeKind::Box:
        require_positive(a, "box half-extent");
        require_positive(b, "box half-extent");
        require_positive(c, "box half-extent");
        break;
    case ShapeKind::Torus:
        require_positive(a, "torus major radius");
        require_positive(b, "torus minor radius");
        if (b >= a) throw ConfigError("shape: torus minor radius must be below the major radius");
        break;
    case ShapeKind::Cylinder:
        require_positive(a, "cylinder radius");
        require_positive(b, "cylinder half-height");
        break;
    case ShapeKind::Union2:
        throw ConfigError("shape: union parts must be primitives");
    }
}

double primitive_area(ShapeKind kind, double a, double b, double c) {
    switch (kind) {
    case ShapeKind::Sphere: return 4.0 * kPi * a * a;
    case ShapeKind::Box: return 8.0 * (a * b + b * c + c * a);
    case ShapeKind::Torus: return 4.0 * kPi * kPi * a * b;
    case ShapeKind::Cylinder: return 4.0 * kPi * a * b + 2.0 * kPi * a * a;
    case ShapeKind::Union2: break;
    }
    throw ConfigError("shape: no analytic area for this kind");
}

void emit(PointCloud& pc, size_t i, double x, double y, double z) {
    pc.at(i, 0) = x;
    pc.at(i, 1) = y;
    pc.at(i, 2) = z;
}

void sample_primitive(Rng& rng, ShapeKind kind, double a, double b, double c, PointCloud& pc,
                      size_t begin, size_t count, double x_shift) {
    for (size_t i = begin; i < begin + count; ++i) {
        switch (kind) {
        case ShapeKind::Sphere: {
            // Uniform-by-area: z uniform on [-r, r], azimuth uniform.
            const double z = rng.uniform(-a, a);
            const double phi = rng.uniform(0.0, 2.0 * kPi);
            const double rho = std::sqrt(std::max(0.0, a * a - z * z));
            emit(pc, i, x_shift + rho * std::cos(phi), rho * std::sin(phi), z);
            break;
        }
        case ShapeKind::Box: {
            // Pick one of 6 faces proportionally to its area.
            const double ax = 4.0 * b * c, ay = 4.0 * a * c, az = 4.0 * a * b;
            const double pick = rng.uniform(0.0, 2.0 * (ax + ay + az));
            const double u = rng.uniform(), v = rng.uniform();
            const double sgn = rng.bernoulli(0.5) ? 1.0 : -1.0;
            double x, y, z;
            if (pick < 2.0 * ax) {
                x = sgn * a;
                y = (2.0 * u - 1.0) * b;
                z = (2.0 * v - 1.0) * c;
            } else if (pick < 2.0 * (ax + ay)) {
                y = sgn * b;
                x = (2.0 * u - 1.0) * a;
                z = (2.0 * v - 1.0) * c;
            } else {
                z = sgn * c;
                x = (2.0 * u - 1.0) * a;
                y = (2.0 * v - 1.0) * b;
            }
            emit(pc, i, x_shift + x, y, z);
            break;
        }
        case ShapeKind::Torus: {
            // Tube angle by rejection against the area element R + r*cos(theta).
            double theta;
            do {
                theta = rng.uniform(0.0, 2.0 * kPi);
            } while (rng.uniform() * (a + b) > a + b * std::cos(theta));
            const double psi = rng.uniform(0.0, 2.0 * kPi);
            const double ring = a + b * std::cos(theta);
            emit(pc, i, x_shift + ring * std::cos(psi), ring * std::sin(psi), b * std::sin(theta));
            break;
        }
        case ShapeKind::Cylinder: {
            const double side = 4.0 * kPi * a * b;
            const double caps = 2.0 * kPi * a * a;
            const double phi = rng.uniform(0.0, 2.0 * kPi);
            if (rng.uniform(0.0, side + caps) < side) {
                emit(pc, i, x_shift + a * std::cos(phi), a * std::sin(phi), rng.uniform(-b, b));
            } else {
                const double rho = a * std::sqrt(rng.uniform());
                const double sgn = rng.bernoulli(0.5) ? 1.0 : -1.0;
                emit(pc, i, x_shift + rho * std::cos(phi), rho * std::sin(phi), sgn * b);
            }
            break;
        }
        case ShapeKind::Union2: break; // unreachable, validated earlier
        }
    }
}

void apply_pose(PointCloud& pc, const std::array<double, 4>& q, const std::array<double, 3>& t) {
    // v' = v + 2*qv x (qv x v + w*v), then translate.
    const double w = q[0], qx = q[1], qy = q[2], qz = q[3];
    for (size_t i = 0; i < pc.count(); ++i) {
        const double x = pc.at(i, 0), y = pc.at(i, 1), z = pc.at(i, 2);
        const double cx = qy * z - qz * y + w * x;
        const double cy = qz * x - qx * z + w * y;
        const double cz = qx * y - qy * x + w * z;
        pc.at(i, 0) = x + 2.0 * (qy * cz - qz * cy) + t[0];
        pc.at(i, 1) = y + 2.0 * (qz * cx - qx * cz) + t[1];
        pc.at(i, 2) = z + 2.0 * (qx * cy - qy * cx) + t[2];
    }
}

} // namespace

const char* shape_kind_name(ShapeKind k) {
    switch (k) {
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Box: return "box";
    case ShapeKind::Torus: return "torus";
    case ShapeKind::Cylinder: return "cylinder";
    case ShapeKind::Union2: return "union2";
    }
    return "?";
}

double surface_area(const ShapeSpec& spec) {
    if (spec.kind == ShapeKind::Union2) {
        return primitive_area(spec.kind1, spec.a, spec.b, spec.c) +
               primitive_area(spec.kind2, spec.a2, spec.b2, spec.c2);
    }
    return primitive_area(spec.kind, spec.a, spec.b, spec.c);
}

PointCloud gen_shape(const ShapeSpec& spec) {
    if (spec.n_points < 1) throw ConfigError("shape: n_points must be >= 1");
    const double qn = spec.quat[0] * spec.quat[0] + spec.quat[1] * spec.quat[1] +
                      spec.quat[2] * spec.quat[2] + spec.quat[3] * spec.quat[3];
    if (std::abs(qn - 1.0) > 1e-9) throw ConfigError("shape: pose quaternion must be unit-norm");

    Rng rng(spec.seed);
    PointCloud pc(spec.n_points);
    if (spec.kind == ShapeKind::Union2) {
        validate_primitive(spec.kind1, spec.a, spec.b, spec.c);
        validate_primitive(spec.kind2, spec.a2, spec.b2, spec.c2);
        if (!(std::isfinite(spec.blend_offset))) {
            throw ConfigError("shape: union blend offset must be finite");
        }
        const double area_a = primitive_area(spec.kind1, spec.a, spec.b, spec.c);
        const double area_b = primitive_area(spec.kind2, spec.a2, spec.b2, spec.c2);
        size_t n_a = static_cast<size_t>(
            std::llround(static_cast<double>(spec.n_points) * area_a / (area_a + area_b)));
        if (spec.n_points >= 2) {
            n_a = std::max<size_t>(1, std::min(n_a, spec.n_points - 1));
        }
        sample_primitive(rng, spec.kind1, spec.a, spec.b, spec.c, pc, 0, n_a, 0.0);
        sample_primitive(rng, spec.kind2, spec.a2, spec.b2, spec.c2, pc, n_a, spec.n_points - n_a,
                         spec.blend_offset);
    } else {
        validate_primitive(spec.kind, spec.a, spec.b, spec.c);
        sample_primitive(rng, spec.kind, spec.a, spec.b, spec.c, pc, 0, spec.n_points, 0.0);
    }
    apply_pose(pc, spec.quat, spec.translate);
    return pc;
}

std::vector<ShapeSpec> make_dataset_specs(size_t n, size_t n_points, uint64_t seed) {
    std::vector<ShapeSpec> specs;
    specs.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const uint64_t shape_seed = derive_seed(seed, "shape/" + std::to_string(i));
        Rng rng(shape_seed);
        ShapeSpec s;
        s.n_points = n_points;
        s.seed = derive_seed(shape_seed, "points");

        auto draw_primitive = [&](double scale, ShapeKind& kind, double& a, double& b, double& c) {
            switch (rng.uniform_int(4)) {
            case 0:
                kind = ShapeKind::Sphere;
                a = scale * rng.uniform(0.5, 1.5);
                break;
            case 1:
                kind = ShapeKind::Box;
                a = scale * rng.uniform(0.3, 1.2);
                b = scale * rng.uniform(0.3, 1.2);
                c = scale * rng.uniform(0.3, 1.2);
                break;
            case 2:
                kind = ShapeKind::Torus;
                a = scale * rng.uniform(0.6, 1.2);
                b = a * rng.uniform(0.2, 0.45);
                break;
            default:
                kind = ShapeKind::Cylinder;
                a = scale * rng.uniform(0.3, 1.0);
                b = scale * rng.uniform(0.3, 1.2);
                break;
            }
        };

        if (rng.uniform() < 0.2) {
            s.kind = ShapeKind::Union2;
            draw_primitive(0.7, s.kind1, s.a, s.b, s.c);
            draw_primitive(0.7, s.kind2, s.a2, s.b2, s.c2);
            s.blend_offset = rng.uniform(0.4, 1.2);
        } else {
            draw_primitive(1.0, s.kind, s.a, s.b, s.c);
        }

        double q[4];
        double qn = 0.0;
        for (double& v : q) {
            v = rng.normal();
            qn += v * v;
        }
        qn = std::sqrt(qn);
        for (int a = 0; a < 4; ++a) s.quat[a] = q[a] / qn;
        for (int a = 0; a < 3; ++a) s.translate[a] = rng.uniform(-0.5, 0.5);
        specs.push_back(s);
    }
    return specs;
}

SplitSizes split_80_10_10(size_t n) {
    SplitSizes s;
    s.train = n * 8 / 10;
    s.val = n / 10;
    s.test = n - s.train - s.val;
    return s;
}

} // namespace sqz::geom
