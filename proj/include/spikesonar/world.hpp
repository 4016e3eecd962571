#pragma once

#include "spikesonar/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace spikesonar {

/// Axis-aligned rectangle in cm.
struct Box {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }
    double distance_to(double x, double y) const;
};

/// Heading in degrees, counter-clockwise from +x, not wrapped.
struct Pose {
    double x_cm = 0.0;
    double y_cm = 0.0;
    double heading_deg = 0.0;
};

struct WorldModel {
    std::vector<Box> boxes;
    Pose start;
    double speed_cm_s = 10.0;
    double turn_rate_deg_s = 45.0;
    // Leaving this rectangle aborts a run. No bounds when empty.
    std::optional<Box> arena;

    void validate() const;

    /// 300 x 200 cm walled arena with one inner box; the robot starts in the
    /// middle facing the inner box 100 cm ahead.
    static WorldModel closed_arena();
    /// One wall across the robot's path distance_cm ahead, no arena bounds.
    static WorldModel single_wall(double distance_cm);
    static WorldModel empty();
};

WorldModel parse_world(std::string_view json_text);
WorldModel load_world(const std::filesystem::path& path);

/// Distance along the heading to the nearest box; infinity if none is hit.
double ray_cast(const WorldModel& world, const Pose& pose);

/// Euclidean distance to the nearest box; infinity for an empty world.
double clearance(const WorldModel& world, double x_cm, double y_cm);

/// Collision with a box or escape from the arena.
class WorldError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrajectoryPoint {
    double t_ms = 0.0;
    Pose pose;
    Mode mode = Mode::Forward;
    double ray_cm = 0.0;
    double clearance_cm = 0.0;
};

struct WorldRun {
    RunReport report;
    std::vector<TrajectoryPoint> trajectory;
    double min_ray_cm = 0.0;
    double min_clearance_cm = 0.0;
};

/// Closed loop: ray-cast distance feeds the offline system and its
/// avoidance mode moves the robot (forward, or turning right in place).
WorldRun run_world(const WorldModel& world, const NeuronParams& params, const FilterConfig& cfg, double horizon_s,
                   const SensorConfig& sensor = {});

/// `t_ms,x_cm,y_cm,heading_deg,mode,ray_cm,clearance_cm`
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory);

} // namespace spikesonar
