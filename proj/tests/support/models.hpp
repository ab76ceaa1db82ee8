#pragma once

#include <span>
#include <string>

#include "rbc/models.hpp"

namespace support {

// Point mass on (last token + 1) mod |V|; token 0 after an empty context.
class CycleModel final : public rbc::LanguageModel {
public:
    explicit CycleModel(std::size_t vocab) : vocab_(vocab) {}
    std::size_t vocab_size() const override { return vocab_; }
    std::string name() const override { return "cycle"; }
    rbc::TokenDistribution next(std::span<const rbc::TokenId> ctx) override {
        const auto t = ctx.empty() ? 0 : (ctx.back() + 1) % vocab_;
        return rbc::TokenDistribution::point_mass(vocab_, static_cast<rbc::TokenId>(t));
    }

private:
    std::size_t vocab_;
};

// Bit model with a constant q.
class ConstantBitModel final : public rbc::BinaryModel {
public:
    explicit ConstantBitModel(double q) : q_(q) {}
    double next_q(const rbc::BitString&) const override { return q_; }

private:
    double q_;
};

}  // namespace support
