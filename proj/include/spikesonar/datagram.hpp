#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace spikesonar::wire {

// Frame layout: [version][kind][payload, little-endian].
//   TOF_MEASUREMENT: u32 microseconds, 6 bytes total
//   SPIKE_EVENT:     u64 milliseconds, 10 bytes total
inline constexpr std::uint8_t kVersion = 0x01;

enum class Kind : std::uint8_t {
    TofMeasurement = 0x01,
    SpikeEvent = 0x02,
};

inline constexpr std::size_t kTofFrameSize = 6;
inline constexpr std::size_t kSpikeFrameSize = 10;

struct TofFrame {
    std::uint32_t tof_us = 0;
    friend bool operator==(const TofFrame&, const TofFrame&) = default;
};

struct SpikeFrame {
    std::uint64_t t_ms = 0;
    friend bool operator==(const SpikeFrame&, const SpikeFrame&) = default;
};

using Datagram = std::variant<TofFrame, SpikeFrame>;
using Bytes = std::vector<std::uint8_t>;

Bytes encode(const Datagram& datagram);

/// nullopt for a wrong version, unknown kind or wrong length.
std::optional<Datagram> decode(std::span<const std::uint8_t> bytes);

} // namespace spikesonar::wire
