#include "spikesonar/datagram.hpp"

namespace spikesonar::wire {

namespace {

template <typename T>
void put_le(Bytes& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

} // namespace

Bytes encode(const Datagram& datagram) {
    Bytes out;
    out.push_back(kVersion);
    if (const auto* tof = std::get_if<TofFrame>(&datagram)) {
        out.push_back(static_cast<std::uint8_t>(Kind::TofMeasurement));
        put_le(out, tof->tof_us);
    } else {
        out.push_back(static_cast<std::uint8_t>(Kind::SpikeEvent));
        put_le(out, std::get<SpikeFrame>(datagram).t_ms);
    }
    return out;
}

std::optional<Datagram> decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != kVersion) return std::nullopt;
    switch (static_cast<Kind>(bytes[1])) {
    case Kind::TofMeasurement:
        if (bytes.size() != kTofFrameSize) return std::nullopt;
        return TofFrame{get_le<std::uint32_t>(bytes.subspan(2))};
    case Kind::SpikeEvent:
        if (bytes.size() != kSpikeFrameSize) return std::nullopt;
        return SpikeFrame{get_le<std::uint64_t>(bytes.subspan(2))};
    }
    return std::nullopt;
}

} // namespace spikesonar::wire
