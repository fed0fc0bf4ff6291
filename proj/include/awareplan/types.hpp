#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace awareplan {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Planar position of an agent (m).
struct AgentState {
    Vec2 position = Vec2::Zero();

    AgentState() = default;
    explicit AgentState(const Vec2& p) : position(p) {}
    AgentState(double x, double y) : position(x, y) {}

    bool operator==(const AgentState& o) const { return position == o.position; }
};

/// Planar velocity command of an agent (m/s).
struct AgentAction {
    Vec2 velocity = Vec2::Zero();

    AgentAction() = default;
    explicit AgentAction(const Vec2& v) : velocity(v) {}
    AgentAction(double x, double y) : velocity(x, y) {}

    bool operator==(const AgentAction& o) const { return velocity == o.velocity; }
};

using Trajectory = std::vector<AgentState>;
using ActionSequence = std::vector<AgentAction>;

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class OutOfBoundsError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class EmptyHorizonError : public Error {
public:
    using Error::Error;
};

inline bool is_finite(const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

/// Weighted squared norm v^T W v.
inline double weighted_sq(const Vec2& v, const Mat2& w) { return v.dot(w * v); }

inline bool is_symmetric_psd(const Mat2& m) {
    if (!m.allFinite() || std::abs(m(0, 1) - m(1, 0)) > 1e-12) {
        return false;
    }
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return m(0, 0) >= -1e-12 && m(1, 1) >= -1e-12 && det >= -1e-12;
}

}  // namespace awareplan
