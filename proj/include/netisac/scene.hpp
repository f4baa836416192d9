#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "netisac/types.hpp"

namespace netisac {

/// K1 x K2 x K3 pixel grid. Pixel index k = k1 + K1*(k2 + K2*k3), so the
/// first axis runs fastest and each block is a contiguous run of K1 pixels.
struct RoiGrid {
    int k1 = 1;
    int k2 = 1;
    int k3 = 1;
    std::array<double, 3> room_size{4.0, 4.0, 4.0};  // metres, metadata only

    RoiGrid() = default;
    RoiGrid(int a, int b, int c);

    int size() const { return k1 * k2 * k3; }
    int block_count() const { return k2 * k3; }
    int block_length() const { return k1; }
    std::array<double, 3> pixel_center(int k) const;
};

/// Scattering scene. Amplitudes are real and nonnegative but kept complex so
/// the estimator algebra stays uniformly complex.
struct RoiVector {
    RoiGrid grid;
    CVec x;

    int support_size() const;
};

RoiVector build_roi(const RoiGrid& grid, const std::vector<int>& support, const std::vector<double>& amplitudes);

/// Support of L pixels forming a compact target: consecutive pixel indices
/// starting at `start` (so whole K1-blocks are filled first).
std::vector<int> contiguous_support(const RoiGrid& grid, int count, int start = 0);

std::vector<CVec> block_partition(const CVec& x, const RoiGrid& grid);
CVec reassemble_blocks(const std::vector<CVec>& blocks);
/// Sum of per-block l2 norms.
double l21_norm(const CVec& x, const RoiGrid& grid);

enum class ChannelKind { Rayleigh, Steering };
/// Static: one channel realisation for the whole frame. PerSlot: channels are
/// redrawn every time slot (fast fading), still known to all users.
enum class Fading { Static, PerSlot };

struct ChannelModel {
    ChannelKind kind = ChannelKind::Rayleigh;
    Fading fading = Fading::Static;
    std::vector<double> path_loss;  // per-user power factor on h_n; empty means all 1
    double carrier_hz = 28e9;

    double user_path_loss(int n) const { return path_loss.empty() ? 1.0 : path_loss.at(n); }
    nlohmann::json to_json() const;
    static ChannelModel from_json(const nlohmann::json& j);
};

std::string to_string(ChannelKind k);
std::string to_string(Fading f);

/// G (BS -> ROI, M x K), h_n (ROI -> user n, length K), g (BS -> comm user).
struct ChannelSet {
    CMat G;
    std::vector<CVec> h;
    CVec g;

    int antennas() const { return static_cast<int>(G.rows()); }
    int pixels() const { return static_cast<int>(G.cols()); }
    int users() const { return static_cast<int>(h.size()); }
    bool finite() const;
};

ChannelSet generate_channels(int M, const RoiGrid& grid, int N, const ChannelModel& model, std::uint64_t seed);

/// Channels indexed by time slot. Static tracks hold a single realisation.
class ChannelTrack {
public:
    ChannelTrack() = default;
    static ChannelTrack generate(int M, const RoiGrid& grid, int N, const ChannelModel& model, std::uint64_t seed,
                                 int T);
    static ChannelTrack constant(ChannelSet set);

    const ChannelSet& at(int i) const { return sets_.size() == 1 ? sets_.front() : sets_.at(i); }
    const ChannelSet& snapshot() const { return sets_.front(); }
    bool time_varying() const { return sets_.size() > 1; }
    int slots() const { return static_cast<int>(sets_.size()); }

private:
    std::vector<ChannelSet> sets_;
};

/// Serializable scene description. Channels are regenerated from the seed
/// rather than stored.
struct SceneSpec {
    RoiGrid grid;
    std::vector<int> support;
    std::vector<double> amplitudes;
    int antennas = 4;
    int users = 5;
    ChannelModel model;
    std::uint64_t channel_seed = 0;

    nlohmann::json to_json() const;
    static SceneSpec from_json(const nlohmann::json& j);
};

/// Debug dump: one row per entry, columns matrix,row,col,re,im.
void dump_channels_csv(const ChannelSet& ch, std::ostream& os);

}  // namespace netisac
