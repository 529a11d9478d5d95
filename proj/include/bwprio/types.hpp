#pragma once

#include <cstdint>
#include <string>

namespace bwprio {

// One epoch is one second of simulated time. Epochs are numbered from 1.
using Epoch = std::int64_t;

enum class BuyerId : std::int32_t {};
enum class SellerId : std::int32_t {};

constexpr std::int32_t to_int(BuyerId id) { return static_cast<std::int32_t>(id); }
constexpr std::int32_t to_int(SellerId id) { return static_cast<std::int32_t>(id); }

inline std::string to_string(BuyerId id) { return std::to_string(to_int(id)); }

}  // namespace bwprio
