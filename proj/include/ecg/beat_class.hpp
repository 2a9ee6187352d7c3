#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace ecg {

/// The five beat labels the classifier distinguishes. Ids are stable and
/// appear in dataset and checkpoint files.
enum class BeatClass : std::uint8_t { NOR = 0, LBBB = 1, RBBB = 2, APC = 3, PVC = 4 };

inline constexpr std::size_t kNumClasses = 5;

inline constexpr std::array<BeatClass, kNumClasses> kAllClasses = {
    BeatClass::NOR, BeatClass::LBBB, BeatClass::RBBB, BeatClass::APC, BeatClass::PVC};

constexpr std::size_t class_id(BeatClass c) noexcept { return static_cast<std::size_t>(c); }

constexpr std::string_view class_name(BeatClass c) noexcept {
    switch (c) {
    case BeatClass::NOR: return "NOR";
    case BeatClass::LBBB: return "LBBB";
    case BeatClass::RBBB: return "RBBB";
    case BeatClass::APC: return "APC";
    case BeatClass::PVC: return "PVC";
    }
    return "?";
}

/// Standard MIT-BIH meaning: A is atrial premature, V is ventricular premature.
constexpr std::optional<BeatClass> class_from_symbol(std::string_view symbol) noexcept {
    if (symbol == "N") return BeatClass::NOR;
    if (symbol == "L") return BeatClass::LBBB;
    if (symbol == "R") return BeatClass::RBBB;
    if (symbol == "A") return BeatClass::APC;
    if (symbol == "V") return BeatClass::PVC;
    return std::nullopt;
}

constexpr std::optional<BeatClass> class_from_id(std::size_t id) noexcept {
    if (id >= kNumClasses) return std::nullopt;
    return static_cast<BeatClass>(id);
}

} // namespace ecg
