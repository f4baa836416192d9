#include "netisac/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "netisac/rng.hpp"

namespace netisac {

RoiGrid::RoiGrid(int a, int b, int c) : k1(a), k2(b), k3(c) {
    if (a < 1 || b < 1 || c < 1) throw ParameterError("ROI dimensions must be >= 1");
}

std::array<double, 3> RoiGrid::pixel_center(int k) const {
    const int i1 = k % k1;
    const int i2 = (k / k1) % k2;
    const int i3 = k / (k1 * k2);
    return {(i1 + 0.5) * room_size[0] / k1, (i2 + 0.5) * room_size[1] / k2, (i3 + 0.5) * room_size[2] / k3};
}

int RoiVector::support_size() const {
    int l = 0;
    for (Eigen::Index k = 0; k < x.size(); ++k)
        if (x(k) != cplx(0.0)) ++l;
    return l;
}

RoiVector build_roi(const RoiGrid& grid, const std::vector<int>& support, const std::vector<double>& amplitudes) {
    if (support.size() != amplitudes.size()) throw ParameterError("support and amplitudes differ in length");
    RoiVector roi{grid, CVec::Zero(grid.size())};
    for (std::size_t j = 0; j < support.size(); ++j) {
        const int k = support[j];
        if (k < 0 || k >= grid.size()) throw ParameterError("support index " + std::to_string(k) + " out of range");
        if (!(amplitudes[j] >= 0.0)) throw ParameterError("scattering amplitudes must be nonnegative");
        roi.x(k) = amplitudes[j];
    }
    return roi;
}

std::vector<int> contiguous_support(const RoiGrid& grid, int count, int start) {
    if (count < 0 || start < 0 || start + count > grid.size()) throw ParameterError("support does not fit the grid");
    std::vector<int> s(count);
    for (int j = 0; j < count; ++j) s[j] = start + j;
    return s;
}

std::vector<CVec> block_partition(const CVec& x, const RoiGrid& grid) {
    if (x.size() != grid.size()) throw ParameterError("vector length does not match grid");
    std::vector<CVec> blocks;
    blocks.reserve(grid.block_count());
    for (int b = 0; b < grid.block_count(); ++b) blocks.emplace_back(x.segment(b * grid.k1, grid.k1));
    return blocks;
}

CVec reassemble_blocks(const std::vector<CVec>& blocks) {
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.size();
    CVec x(n);
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
        x.segment(off, b.size()) = b;
        off += b.size();
    }
    return x;
}

double l21_norm(const CVec& x, const RoiGrid& grid) {
    double s = 0.0;
    for (int b = 0; b < grid.block_count(); ++b) s += x.segment(b * grid.k1, grid.k1).norm();
    return s;
}

std::string to_string(ChannelKind k) { return k == ChannelKind::Rayleigh ? "rayleigh" : "steering"; }
std::string to_string(Fading f) { return f == Fading::Static ? "static" : "per_slot"; }

nlohmann::json ChannelModel::to_json() const {
    return {{"kind", to_string(kind)}, {"fading", to_string(fading)}, {"path_loss", path_loss},
            {"carrier_hz", carrier_hz}};
}

ChannelModel ChannelModel::from_json(const nlohmann::json& j) {
    ChannelModel m;
    const auto kind = j.value("kind", std::string("rayleigh"));
    if (kind == "rayleigh") m.kind = ChannelKind::Rayleigh;
    else if (kind == "steering") m.kind = ChannelKind::Steering;
    else throw ConfigError("unknown channel kind '" + kind + "'");
    const auto fading = j.value("fading", std::string("static"));
    if (fading == "static") m.fading = Fading::Static;
    else if (fading == "per_slot") m.fading = Fading::PerSlot;
    else throw ConfigError("unknown fading mode '" + fading + "'");
    m.path_loss = j.value("path_loss", std::vector<double>{});
    m.carrier_hz = j.value("carrier_hz", 28e9);
    for (double p : m.path_loss)
        if (!(p >= 0.0)) throw ConfigError("path loss factors must be nonnegative");
    return m;
}

bool ChannelSet::finite() const {
    if (!G.allFinite() || !g.allFinite()) return false;
    return std::all_of(h.begin(), h.end(), [](const CVec& v) { return v.allFinite(); });
}

namespace {

using Point = std::array<double, 3>;

double distance(const Point& a, const Point& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

// Half-wavelength ULA along x, located in front of the room.
ChannelSet steering_channels(int M, const RoiGrid& grid, int N, const ChannelModel& model, Rng& rng) {
    constexpr double kPi = std::numbers::pi;
    const double lambda = 299792458.0 / model.carrier_hz;
    const Point bs{grid.room_size[0] / 2, -10.0, grid.room_size[2] / 2};
    const int K = grid.size();

    auto array_response = [&](const Point& target) {
        const double dx = target[0] - bs[0];
        const double r = distance(target, bs);
        const double sin_theta = dx / r;
        CVec a(M);
        for (int m = 0; m < M; ++m) a(m) = std::polar(1.0, -kPi * m * sin_theta);
        return a;
    };

    ChannelSet ch;
    ch.G.resize(M, K);
    for (int k = 0; k < K; ++k) ch.G.col(k) = array_response(grid.pixel_center(k));

    for (int n = 0; n < N; ++n) {
        const Point user{-1.0 + rng.uniform() * (grid.room_size[0] + 2), -1.0 + rng.uniform() * (grid.room_size[1] + 2),
                         rng.uniform() * grid.room_size[2]};
        CVec hn(K);
        double mean_d = 0.0;
        for (int k = 0; k < K; ++k) mean_d += distance(user, grid.pixel_center(k));
        mean_d /= K;
        const double amp = std::sqrt(model.user_path_loss(n));
        for (int k = 0; k < K; ++k) {
            const double d = distance(user, grid.pixel_center(k));
            hn(k) = amp * (mean_d / d) * std::polar(1.0, -2 * kPi * d / lambda);
        }
        ch.h.push_back(std::move(hn));
    }
    const double theta = (rng.uniform() - 0.5) * kPi;
    ch.g.resize(M);
    for (int m = 0; m < M; ++m) ch.g(m) = std::polar(1.0, -kPi * m * std::sin(theta));
    return ch;
}

}  // namespace

ChannelSet generate_channels(int M, const RoiGrid& grid, int N, const ChannelModel& model, std::uint64_t seed) {
    if (M < 1 || N < 1) throw ParameterError("need at least one antenna and one user");
    if (!model.path_loss.empty() && static_cast<int>(model.path_loss.size()) != N)
        throw ParameterError("path_loss must have one entry per user");
    Rng rng(derive_seed(seed, "channels"));
    if (model.kind == ChannelKind::Steering) return steering_channels(M, grid, N, model, rng);

    ChannelSet ch;
    ch.G = rng.complex_normal_mat(M, grid.size());
    for (int n = 0; n < N; ++n) ch.h.push_back(rng.complex_normal_vec(grid.size(), model.user_path_loss(n)));
    ch.g = rng.complex_normal_vec(M);
    return ch;
}

ChannelTrack ChannelTrack::generate(int M, const RoiGrid& grid, int N, const ChannelModel& model, std::uint64_t seed,
                                    int T) {
    ChannelTrack track;
    if (model.fading == Fading::Static || T <= 1) {
        track.sets_.push_back(generate_channels(M, grid, N, model, seed));
        return track;
    }
    track.sets_.reserve(T);
    for (int i = 0; i < T; ++i) track.sets_.push_back(generate_channels(M, grid, N, model, derive_seed(seed, "slot", i)));
    return track;
}

ChannelTrack ChannelTrack::constant(ChannelSet set) {
    ChannelTrack track;
    track.sets_.push_back(std::move(set));
    return track;
}

nlohmann::json SceneSpec::to_json() const {
    return {{"dims", {grid.k1, grid.k2, grid.k3}},
            {"room_size", grid.room_size},
            {"support", support},
            {"amplitudes", amplitudes},
            {"antennas", antennas},
            {"users", users},
            {"channel", {{"seed", channel_seed}, {"model", model.to_json()}}}};
}

SceneSpec SceneSpec::from_json(const nlohmann::json& j) {
    SceneSpec s;
    const auto dims = j.at("dims").get<std::vector<int>>();
    if (dims.size() != 3) throw ConfigError("dims must have three entries");
    s.grid = RoiGrid(dims[0], dims[1], dims[2]);
    if (j.contains("room_size")) s.grid.room_size = j.at("room_size").get<std::array<double, 3>>();
    s.support = j.value("support", std::vector<int>{});
    s.amplitudes = j.value("amplitudes", std::vector<double>{});
    s.antennas = j.value("antennas", 4);
    s.users = j.value("users", 5);
    if (j.contains("channel")) {
        s.channel_seed = j["channel"].value("seed", std::uint64_t{0});
        if (j["channel"].contains("model")) s.model = ChannelModel::from_json(j["channel"]["model"]);
    }
    return s;
}

void dump_channels_csv(const ChannelSet& ch, std::ostream& os) {
    os.precision(17);
    os << "matrix,row,col,re,im\n";
    for (Eigen::Index c = 0; c < ch.G.cols(); ++c)
        for (Eigen::Index r = 0; r < ch.G.rows(); ++r)
            os << "G," << r << ',' << c << ',' << ch.G(r, c).real() << ',' << ch.G(r, c).imag() << '\n';
    for (std::size_t n = 0; n < ch.h.size(); ++n)
        for (Eigen::Index k = 0; k < ch.h[n].size(); ++k)
            os << "h" << n << ',' << k << ",0," << ch.h[n](k).real() << ',' << ch.h[n](k).imag() << '\n';
    for (Eigen::Index m = 0; m < ch.g.size(); ++m) os << "g," << m << ",0," << ch.g(m).real() << ',' << ch.g(m).imag() << '\n';
}

}  // namespace netisac
