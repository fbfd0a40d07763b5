#pragma once

// Entity-salience features and the argument-position extra feature fed to the
// pair composition network. Pure and stateless.

#include <array>

#include "evimp/corpus.hpp"

namespace evimp::salience {

using corpus::ArgPosition;
using corpus::Entity;
using corpus::MentionKind;

struct SalienceFeatures {
    int first_loc = 0;   // sentence index of the entity's first mention
    int head_count = 0;  // occurrences of the representative head lemma
    int named = 0;
    int nominal = 0;
    int pronominal = 0;
    int total = 0;

    bool operator==(const SalienceFeatures&) const = default;
};

inline SalienceFeatures extract_salience(const Entity& entity) {
    if (entity.mentions.size() < 2)
        throw ContractError("extract_salience: entity has fewer than two mentions");
    SalienceFeatures f;
    f.first_loc = entity.mentions.front().sentence_index;
    const std::string repr = corpus::representative_lemma(entity);
    for (const corpus::Mention& m : entity.mentions) {
        f.first_loc = std::min(f.first_loc, m.sentence_index);
        if (lowercase(m.head_lemma) == repr) f.head_count += 1;
        switch (m.kind) {
            case MentionKind::named: f.named += 1; break;
            case MentionKind::nominal: f.nominal += 1; break;
            case MentionKind::pronominal: f.pronominal += 1; break;
        }
    }
    f.total = static_cast<int>(entity.mentions.size());
    return f;
}

// Feature-group mask for the Table-4-style ablations. Masked groups are
// removed from the pair-network input, not zeroed, so ablated models are
// genuinely smaller.
struct SalienceMask {
    bool first_loc = true;
    bool head_count = true;
    bool mentions = true;

    int extra_width() const {
        return 3 + (first_loc ? 1 : 0) + (head_count ? 1 : 0) + (mentions ? 4 : 0);
    }

    bool operator==(const SalienceMask&) const = default;

    static SalienceMask all() { return {}; }
    static SalienceMask none() { return {false, false, false}; }

    // Parse a comma-separated ablation list ("head_count,1st_loc"): the named
    // groups are switched OFF.
    static SalienceMask ablate(const std::string& groups) {
        SalienceMask mask;
        if (groups.empty()) return mask;
        for (const std::string& g : split(groups, ',')) {
            if (g == "1st_loc")
                mask.first_loc = false;
            else if (g == "head_count")
                mask.head_count = false;
            else if (g == "mentions")
                mask.mentions = false;
            else if (g == "all")
                mask = none();
            else if (!g.empty())
                throw FormatError("unknown salience feature group: " + g);
        }
        return mask;
    }

    std::string describe() const {
        if (first_loc && head_count && mentions) return "all";
        if (!first_loc && !head_count && !mentions) return "none";
        std::string out;
        auto drop = [&](const char* name) {
            if (!out.empty()) out += ",";
            out += name;
        };
        if (!mentions) drop("-mentions");
        if (!head_count) drop("-head_count");
        if (!first_loc) drop("-1st_loc");
        return out;
    }
};

// Position one-hot plus encoded salience. Counts are encoded as log(1+x) and
// the first location as 1/(1+x) so the network sees bounded inputs; the raw
// values are available behind a flag.
struct ExtraFeatureVector {
    std::array<double, 3> position_onehot{};
    std::array<double, 6> salience{};  // first_loc, head_count, named, nominal, pronominal, total

    // Project to the model input layout under a mask.
    template <class S>
    std::vector<S> masked(const SalienceMask& mask) const {
        std::vector<S> v;
        v.reserve(static_cast<size_t>(mask.extra_width()));
        for (double x : position_onehot) v.push_back(static_cast<S>(x));
        if (mask.first_loc) v.push_back(static_cast<S>(salience[0]));
        if (mask.head_count) v.push_back(static_cast<S>(salience[1]));
        if (mask.mentions)
            for (int i = 2; i < 6; ++i) v.push_back(static_cast<S>(salience[i]));
        return v;
    }
};

inline ExtraFeatureVector encode_extra_features(ArgPosition position, const SalienceFeatures& f,
                                                bool raw = false) {
    ExtraFeatureVector v;
    v.position_onehot[static_cast<int>(position)] = 1.0;
    if (raw) {
        v.salience = {static_cast<double>(f.first_loc), static_cast<double>(f.head_count),
                      static_cast<double>(f.named),     static_cast<double>(f.nominal),
                      static_cast<double>(f.pronominal), static_cast<double>(f.total)};
    } else {
        v.salience = {1.0 / (1.0 + f.first_loc), std::log1p(static_cast<double>(f.head_count)),
                      std::log1p(static_cast<double>(f.named)),
                      std::log1p(static_cast<double>(f.nominal)),
                      std::log1p(static_cast<double>(f.pronominal)),
                      std::log1p(static_cast<double>(f.total))};
    }
    return v;
}

}  // namespace evimp::salience
