#include "spikesonar/world.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace spikesonar {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

std::string describe(const Pose& p) {
    std::ostringstream out;
    out << "(" << p.x_cm << ", " << p.y_cm << ") heading " << p.heading_deg << " deg";
    return out.str();
}

Box box_from_json(const json& j) {
    return Box{j.at("x_min").get<double>(), j.at("y_min").get<double>(), j.at("x_max").get<double>(),
               j.at("y_max").get<double>()};
}

} // namespace

double Box::distance_to(double x, double y) const {
    const double dx = std::max({x_min - x, 0.0, x - x_max});
    const double dy = std::max({y_min - y, 0.0, y - y_max});
    return std::hypot(dx, dy);
}

void WorldModel::validate() const {
    for (const auto& b : boxes) {
        if (!(b.x_min < b.x_max && b.y_min < b.y_max)) throw std::invalid_argument("world: degenerate box");
        if (b.contains(start.x_cm, start.y_cm)) throw std::invalid_argument("world: robot starts inside a box");
    }
    if (!(speed_cm_s >= 0.0) || !(turn_rate_deg_s > 0.0)) {
        throw std::invalid_argument("world: speed must be >= 0 and turn rate > 0");
    }
    if (arena && !arena->contains(start.x_cm, start.y_cm)) {
        throw std::invalid_argument("world: robot starts outside the arena");
    }
}

WorldModel WorldModel::closed_arena() {
    WorldModel w;
    constexpr double kWall = 10.0;
    constexpr double kWidth = 300.0;
    constexpr double kHeight = 200.0;
    w.boxes = {
        {-kWall, -kWall, kWidth + kWall, 0.0},             // south
        {-kWall, kHeight, kWidth + kWall, kHeight + kWall}, // north
        {-kWall, 0.0, 0.0, kHeight},                        // west
        {kWidth, 0.0, kWidth + kWall, kHeight},             // east
        {200.0, 60.0, 240.0, 120.0},                        // inner box
    };
    w.start = Pose{100.0, 100.0, 0.0};
    w.arena = Box{-kWall, -kWall, kWidth + kWall, kHeight + kWall};
    return w;
}

WorldModel WorldModel::single_wall(double distance_cm) {
    WorldModel w;
    w.boxes = {{distance_cm, -500.0, distance_cm + 10.0, 500.0}};
    w.start = Pose{0.0, 0.0, 0.0};
    return w;
}

WorldModel WorldModel::empty() { return WorldModel{}; }

WorldModel parse_world(std::string_view json_text) {
    const auto doc = json::parse(json_text);
    WorldModel w;
    for (const auto& b : doc.at("boxes")) w.boxes.push_back(box_from_json(b));
    if (doc.contains("start")) {
        const auto& s = doc.at("start");
        w.start = Pose{s.at("x_cm").get<double>(), s.at("y_cm").get<double>(), s.value("heading_deg", 0.0)};
    }
    w.speed_cm_s = doc.value("speed_cm_s", w.speed_cm_s);
    w.turn_rate_deg_s = doc.value("turn_rate_deg_s", w.turn_rate_deg_s);
    if (doc.contains("arena") && !doc.at("arena").is_null()) w.arena = box_from_json(doc.at("arena"));
    w.validate();
    return w;
}

WorldModel load_world(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_world(buf.str());
}

double ray_cast(const WorldModel& world, const Pose& pose) {
    const double dx = std::cos(radians(pose.heading_deg));
    const double dy = std::sin(radians(pose.heading_deg));
    double best = kInf;
    for (const auto& b : world.boxes) {
        // slab intersection
        double t_near = -kInf;
        double t_far = kInf;
        bool miss = false;
        for (auto [o, d, lo, hi] : {std::tuple{pose.x_cm, dx, b.x_min, b.x_max}, std::tuple{pose.y_cm, dy, b.y_min, b.y_max}}) {
            if (std::abs(d) < 1e-12) {
                if (o < lo || o > hi) miss = true;
                continue;
            }
            double t0 = (lo - o) / d;
            double t1 = (hi - o) / d;
            if (t0 > t1) std::swap(t0, t1);
            t_near = std::max(t_near, t0);
            t_far = std::min(t_far, t1);
        }
        if (miss || t_far < std::max(t_near, 0.0)) continue;
        best = std::min(best, std::max(t_near, 0.0));
    }
    return best;
}

double clearance(const WorldModel& world, double x_cm, double y_cm) {
    double best = kInf;
    for (const auto& b : world.boxes) best = std::min(best, b.distance_to(x_cm, y_cm));
    return best;
}

WorldRun run_world(const WorldModel& world, const NeuronParams& params, const FilterConfig& cfg, double horizon_s,
                   const SensorConfig& sensor) {
    world.validate();
    params.validate();
    if (params.dt != 1.0) throw std::invalid_argument("the sensor pipeline runs at dt = 1 ms");

    OfflineSystem system(params, cfg, sensor);
    WorldRun out;
    out.min_ray_cm = kInf;
    out.min_clearance_cm = kInf;

    Pose pose = world.start;
    const double dt_s = params.dt / 1000.0;
    const auto ticks = static_cast<std::int64_t>(std::floor(horizon_s * 1000.0 / params.dt));
    for (std::int64_t k = 0; k < ticks; ++k) {
        const double t = static_cast<double>(k) * params.dt;
        const double ray = ray_cast(world, pose);
        const double clear = clearance(world, pose.x_cm, pose.y_cm);
        const auto row = system.tick(t, ray);
        if (row.in_spike) out.report.input_spikes.push_back({kInjectorSource, t});
        if (row.out_spike) out.report.output_spikes.push_back({LifEngine::kOutputSource, t});
        out.report.rows.push_back(row);
        out.trajectory.push_back({t, pose, row.mode, ray, clear});
        out.min_ray_cm = std::min(out.min_ray_cm, ray);
        out.min_clearance_cm = std::min(out.min_clearance_cm, clear);

        if (row.mode == Mode::Forward) {
            pose.x_cm += world.speed_cm_s * dt_s * std::cos(radians(pose.heading_deg));
            pose.y_cm += world.speed_cm_s * dt_s * std::sin(radians(pose.heading_deg));
        } else {
            pose.heading_deg -= world.turn_rate_deg_s * dt_s;
        }

        for (const auto& b : world.boxes) {
            if (b.contains(pose.x_cm, pose.y_cm)) {
                throw WorldError("robot collided with a box at t = " + std::to_string(t) + " ms, " + describe(pose));
            }
        }
        if (world.arena && !world.arena->contains(pose.x_cm, pose.y_cm)) {
            throw WorldError("robot left the arena at t = " + std::to_string(t) + " ms, " + describe(pose));
        }
    }
    return out;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryPoint>& trajectory) {
    out << "t_ms,x_cm,y_cm,heading_deg,mode,ray_cm,clearance_cm\n";
    out << std::setprecision(10);
    for (const auto& p : trajectory) {
        out << p.t_ms << ',' << p.pose.x_cm << ',' << p.pose.y_cm << ',' << p.pose.heading_deg << ','
            << to_string(p.mode) << ',' << p.ray_cm << ',' << p.clearance_cm << '\n';
    }
}

} // namespace spikesonar
