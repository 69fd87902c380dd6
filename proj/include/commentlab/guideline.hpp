#pragma once

#include <array>
#include <string_view>

#include "io.hpp"

namespace commentlab {

struct Criterion {
    std::string_view id;
    bool positive; // true: qualifies as hope speech; false: disqualifies
    std::string_view text;
};

// Annotator checklist for hope-speech labeling. A comment is hope speech when
// any positive criterion applies and no negative criterion applies.
inline constexpr std::array<Criterion, 13> kHopeCriteria{{
    {"P1", true,
     "Author says they are from a country outside the conflict and is positive toward both conflicting countries."},
    {"P2", true,
     "Author says they are from one of the conflicting countries and is positive toward some entity of the other "
     "country (its people, media, army, government or a profession)."},
    {"P3", true, "Comment asks fellow citizens to de-escalate or stay calm."},
    {"P4", true, "Author says they are from one of the conflicting countries and criticises something about their own country."},
    {"P5", true, "Comment criticises something about both conflicting countries."},
    {"P6", true, "Comment asks both countries to stay peaceful."},
    {"P7", true, "Comment raises the human cost of war or asks that civilian casualties be avoided."},
    {"P8", true, "Comment expresses a wish for peace without conditions (e.g. \"we want peace\")."},
    {"N1", false,
     "Author says they are from a conflicting country and shows nothing positive toward the other conflicting country."},
    {"N2", false, "Author says they are from a country outside the conflict but sides with only one conflicting country."},
    {"N3", false, "Comment calls for or cheers violence."},
    {"N4", false, "Comment uses a racial, ethnic or national slur."},
    {"N5", false, "Comment justifies retaliation by blaming the other side's earlier act (whataboutism)."},
}};

inline const Criterion* find_criterion(std::string_view id) {
    for (const auto& c : kHopeCriteria) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

inline json guideline_json() {
    json positive = json::array(), negative = json::array();
    for (const auto& c : kHopeCriteria) {
        (c.positive ? positive : negative).push_back({{"id", c.id}, {"text", c.text}});
    }
    return json{{"title", "Hope-speech labeling guideline"},
                {"rule", "Label 'hope' when at least one positive criterion applies and no negative criterion applies. "
                         "Use 'indeterminate' only when the comment cannot be understood."},
                {"positive", positive},
                {"negative", negative}};
}

} // namespace commentlab
