#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace npt {

/// Anything the integrators can pull standard normal draws from.
class GaussianSource {
public:
    virtual ~GaussianSource() = default;
    virtual double next() = 0;
    virtual void fill(std::span<double> out) {
        for (auto& x : out) x = next();
    }
};

/// Philox4x32-10 block cipher (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;
    static Counter encrypt(Counter ctr, Key key);
};

/// Counter-based Gaussian stream. The 128-bit Philox counter holds
/// (block index, stream_id) and the key holds the seed, so (seed, stream_id)
/// fixes the whole sequence and streams never overlap.
class NoiseStream final : public GaussianSource {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t stream_id);

    double next() override;
    void fill(std::span<double> out) override;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t draws() const { return draws_; }

    /// Uniform in (0, 1), consuming one block; used for the Box-Muller pair.
    std::array<double, 2> uniform_pair();

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t block_ = 0;
    std::uint64_t draws_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Plays back a prepared sequence; throws once exhausted.
class ReplayNoise final : public GaussianSource {
public:
    ReplayNoise() = default;
    explicit ReplayNoise(std::vector<double> draws) : draws_(std::move(draws)) {}

    double next() override;
    void reset(std::vector<double> draws) {
        draws_ = std::move(draws);
        pos_ = 0;
    }
    std::vector<double>& buffer() { return draws_; }
    void rewind() { pos_ = 0; }
    std::size_t remaining() const { return draws_.size() - pos_; }

private:
    std::vector<double> draws_;
    std::size_t pos_ = 0;
};

/// Forwards to another source and keeps a copy of every draw.
class RecordingNoise final : public GaussianSource {
public:
    explicit RecordingNoise(GaussianSource& inner) : inner_(inner) {}
    double next() override {
        const double x = inner_.next();
        record_.push_back(x);
        return x;
    }
    const std::vector<double>& record() const { return record_; }

private:
    GaussianSource& inner_;
    std::vector<double> record_;
};

/// Always returns zero; switches off every stochastic term.
class ZeroNoise final : public GaussianSource {
public:
    double next() override { return 0.0; }
};

}  // namespace npt
