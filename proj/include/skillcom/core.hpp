#pragma once
// Core domain types: semantic units, task descriptors, budgets, channel state,
// and the unit wire frame.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "skillcom/text.hpp"

namespace skillcom {

enum class UnitType : uint8_t {
    Keyword = 0,
    Entity = 1,
    Evidence = 2,
    SlotValue = 3,
    Summary = 4,
};

inline const char* unit_type_name(UnitType t) {
    switch (t) {
        case UnitType::Keyword: return "Keyword";
        case UnitType::Entity: return "Entity";
        case UnitType::Evidence: return "Evidence";
        case UnitType::SlotValue: return "SlotValue";
        case UnitType::Summary: return "Summary";
    }
    return "?";
}

inline std::optional<UnitType> unit_type_from_name(const std::string& name) {
    std::string n = to_lower(name);
    if (n == "keyword") return UnitType::Keyword;
    if (n == "entity") return UnitType::Entity;
    if (n == "evidence") return UnitType::Evidence;
    if (n == "slotvalue" || n == "slot_value" || n == "slot-value") return UnitType::SlotValue;
    if (n == "summary") return UnitType::Summary;
    return std::nullopt;
}

// token cost estimate: max(1, ceil(chars / 4)), chars = UTF-8 code points
inline double estimate_tokens(const std::string& payload) {
    size_t chars = utf8_length(payload);
    double t = std::ceil(static_cast<double>(chars) / 4.0);
    return t < 1.0 ? 1.0 : t;
}

// The six-field semantic unit: (payload, type, relevance, importance,
// robustness, token cost), plus a sequence id and a synthetic flag set only by
// the repair stage.
struct SemanticUnit {
    uint32_t id = 0;
    std::string payload;
    UnitType type = UnitType::Keyword;
    double relevance = 0.0;   // r in [0,1]
    double importance = 0.0;  // s in [0,1]
    double robustness = 0.0;  // g in [0,1]
    double token_cost = 1.0;  // kappa > 0
    bool synthetic = false;

    void validate() const {
        if (relevance < 0.0 || relevance > 1.0) throw std::invalid_argument("unit relevance out of [0,1]");
        if (importance < 0.0 || importance > 1.0) throw std::invalid_argument("unit importance out of [0,1]");
        if (robustness < 0.0 || robustness > 1.0) throw std::invalid_argument("unit robustness out of [0,1]");
        if (token_cost <= 0.0) throw std::invalid_argument("unit token_cost must be > 0");
    }

    size_t char_length() const { return payload.size(); }

    bool operator==(const SemanticUnit& o) const {
        return id == o.id && payload == o.payload && type == o.type &&
               relevance == o.relevance && importance == o.importance &&
               robustness == o.robustness && token_cost == o.token_cost &&
               synthetic == o.synthetic;
    }
};

inline SemanticUnit make_unit(uint32_t id, UnitType type, std::string payload,
                              double r, double s, double g,
                              bool synthetic = false) {
    SemanticUnit u;
    u.id = id;
    u.type = type;
    u.payload = std::move(payload);
    u.relevance = r;
    u.importance = s;
    u.robustness = g;
    u.token_cost = estimate_tokens(u.payload);
    u.synthetic = synthetic;
    u.validate();
    return u;
}

// checks per-unit ranges and id uniqueness across the set
inline void validate_units(const std::vector<SemanticUnit>& units) {
    std::set<uint32_t> seen;
    for (const auto& u : units) {
        u.validate();
        if (!seen.insert(u.id).second)
            throw std::invalid_argument("duplicate unit id " + std::to_string(u.id));
    }
}

enum class TaskKind { QA, DST };

using SlotTriple = std::tuple<std::string, std::string, std::string>;  // (domain, slot, value)
using DialogueState = std::set<SlotTriple>;

struct ReferenceOutput {
    std::optional<std::string> qa_answer;
    std::optional<DialogueState> dst_state;
};

struct TaskDescriptor {
    TaskKind kind = TaskKind::QA;
    std::string query;  // QA question or DST instruction
    std::string context_hint;
    ReferenceOutput reference;  // metrics-only; never fed to transmitter skills
};

struct BudgetTriple {
    int max_units = 1;       // B_u
    double max_tokens = 1;   // B_kappa
    int max_chars = 1;       // B_c

    void validate() const {
        if (max_units <= 0 || max_tokens <= 0 || max_chars <= 0)
            throw std::invalid_argument("budgets must be strictly positive");
    }
};

struct ChannelState {
    double snr_db = 7.0;
    double code_rate = 0.5;  // R in (0,1]

    void validate() const {
        if (!(code_rate > 0.0 && code_rate <= 1.0))
            throw std::invalid_argument("code_rate must be in (0,1]");
    }
};

struct PriorityWeights {
    double alpha_r = 0.4;
    double alpha_s = 0.3;
    double alpha_g = 0.2;
    double alpha_c = 0.01;

    void validate() const {
        if (alpha_r < 0 || alpha_s < 0 || alpha_g < 0 || alpha_c < 0)
            throw std::invalid_argument("priority weights must be non-negative");
    }
};

// ---- unit wire frame -------------------------------------------------------
// frame = 4-byte big-endian id, 1-byte type tag, UTF-8 payload bytes.
// Only (id, type, payload) travel; (r, s, g, kappa) stay transmitter-side.

inline constexpr size_t kFrameHeaderBytes = 5;
inline constexpr size_t kMaxPayloadBytes = 1u << 16;

class FrameError : public std::runtime_error {
  public:
    explicit FrameError(const std::string& what) : std::runtime_error(what) {}
};

inline std::vector<uint8_t> serialize_unit(const SemanticUnit& u) {
    if (u.payload.size() > kMaxPayloadBytes)
        throw FrameError("payload exceeds 2^16 bytes");
    std::vector<uint8_t> frame;
    frame.reserve(kFrameHeaderBytes + u.payload.size());
    frame.push_back(static_cast<uint8_t>((u.id >> 24) & 0xff));
    frame.push_back(static_cast<uint8_t>((u.id >> 16) & 0xff));
    frame.push_back(static_cast<uint8_t>((u.id >> 8) & 0xff));
    frame.push_back(static_cast<uint8_t>(u.id & 0xff));
    frame.push_back(static_cast<uint8_t>(u.type));
    frame.insert(frame.end(), u.payload.begin(), u.payload.end());
    return frame;
}

// byte length L_j of a unit as it goes over the channel
inline size_t frame_length(const SemanticUnit& u) {
    if (u.payload.size() > kMaxPayloadBytes)
        throw FrameError("payload exceeds 2^16 bytes");
    return kFrameHeaderBytes + u.payload.size();
}

// restores the (id, type, payload) projection; metadata fields are left at
// defaults and come from transmitter-side bookkeeping
inline SemanticUnit deserialize_unit(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < kFrameHeaderBytes)
        throw FrameError("malformed frame: shorter than header");
    uint32_t id = (static_cast<uint32_t>(bytes[0]) << 24) |
                  (static_cast<uint32_t>(bytes[1]) << 16) |
                  (static_cast<uint32_t>(bytes[2]) << 8) |
                  static_cast<uint32_t>(bytes[3]);
    uint8_t tag = bytes[4];
    if (tag > static_cast<uint8_t>(UnitType::Summary))
        throw FrameError("unknown type tag " + std::to_string(tag));
    std::string payload(bytes.begin() + kFrameHeaderBytes, bytes.end());
    if (!valid_utf8(payload)) throw FrameError("payload is not valid UTF-8");
    SemanticUnit u;
    u.id = id;
    u.type = static_cast<UnitType>(tag);
    u.payload = std::move(payload);
    u.token_cost = estimate_tokens(u.payload);
    return u;
}

inline std::string format_slot_triple(const SlotTriple& t) {
    return std::get<0>(t) + "-" + std::get<1>(t) + "=" + std::get<2>(t);
}

// canonical "domain-slot=value" form; returns nullopt when unparseable
inline std::optional<SlotTriple> parse_slot_triple(const std::string& text) {
    std::string s = trim(text);
    size_t eq = s.find('=');
    if (eq == std::string::npos) return std::nullopt;
    std::string left = s.substr(0, eq);
    std::string value = trim(s.substr(eq + 1));
    size_t dash = left.find('-');
    if (dash == std::string::npos) return std::nullopt;
    std::string domain = to_lower(trim(left.substr(0, dash)));
    std::string slot = to_lower(trim(left.substr(dash + 1)));
    std::string val = to_lower(value);
    if (domain.empty() || slot.empty() || val.empty()) return std::nullopt;
    return SlotTriple{domain, slot, val};
}

}  // namespace skillcom
