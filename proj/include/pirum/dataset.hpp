#pragma once

// Choice data: CSV ingestion/export and simulation from a choice model.

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pirum/battery.hpp"
#include "pirum/choice_models.hpp"
#include "pirum/detail/csv.hpp"
#include "pirum/detail/parallel.hpp"
#include "pirum/detail/rng.hpp"
#include "pirum/errors.hpp"

namespace pirum {

enum class Response { x, y, indifferent };

inline char to_char(Response r) { return r == Response::x ? 'X' : (r == Response::y ? 'Y' : 'I'); }

inline Response parse_response(std::string_view s) {
    if (s == "X") return Response::x;
    if (s == "Y") return Response::y;
    if (s == "I") return Response::indifferent;
    throw ParseError("invalid response '" + std::string(s) + "' (expected X, Y or I)");
}

struct Subject {
    std::string id;
    QuestionSet question_set = QuestionSet::full_40;
    std::vector<std::size_t> pairs;  // battery indices, ascending
    std::vector<Response> responses;
};

struct ChoiceDataset {
    std::shared_ptr<const Battery> battery;
    std::vector<Subject> subjects;

    std::size_t choice_count() const {
        std::size_t n = 0;
        for (const auto& s : subjects) n += s.responses.size();
        return n;
    }

    void validate() const {
        if (!battery) throw InvalidArgument("dataset has no battery");
        for (const auto& s : subjects) {
            if (s.pairs.size() != s.responses.size())
                throw InvalidArgument("subject " + s.id + ": responses do not align with questions");
            for (auto j : s.pairs)
                if (j >= battery->size()) throw InvalidArgument("subject " + s.id + ": pair index outside the battery");
        }
    }
};

inline constexpr std::string_view choices_header = "subject_id,block,question,response";

/// Reads `subject_id,block,question,response` rows. Subjects keep the order
/// of first appearance; each subject's rows must cover one question set exactly.
inline ChoiceDataset load_choices(std::istream& in, std::shared_ptr<const Battery> battery) {
    if (!battery) throw InvalidArgument("load_choices needs a battery");
    ChoiceDataset ds{battery, {}};
    std::map<std::string, std::size_t> slot;
    std::vector<std::map<std::size_t, Response>> answers;
    for (const auto& row : detail::read_csv(in, choices_header)) {
        const auto& c = row.fields;
        try {
            if (c[0].empty()) throw ParseError("empty subject_id");
            const double b = detail::parse_double(c[1], "block");
            const double q = detail::parse_double(c[2], "question");
            const auto idx = battery->find(static_cast<int>(b), static_cast<int>(q));
            if (!idx || b != static_cast<int>(b) || q != static_cast<int>(q))
                throw ParseError("unknown question (block " + c[1] + ", question " + c[2] + ")");
            const auto r = parse_response(c[3]);
            auto [it, fresh] = slot.emplace(c[0], ds.subjects.size());
            if (fresh) {
                ds.subjects.push_back(Subject{c[0], QuestionSet::full_40, {}, {}});
                answers.emplace_back();
            }
            if (!answers[it->second].emplace(*idx, r).second)
                throw ParseError("duplicate answer for subject " + c[0] + " (block " + c[1] + ", question " + c[2] + ")");
        } catch (const ParseError& e) {
            throw ParseError(e.what(), row.line);
        }
    }
    for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
        auto& s = ds.subjects[i];
        for (auto [j, r] : answers[i]) {
            s.pairs.push_back(j);
            s.responses.push_back(r);
        }
        bool matched = false;
        for (auto qs : all_question_sets) {
            if (battery->indices(qs) == s.pairs) {
                s.question_set = qs;
                matched = true;
                break;
            }
        }
        if (!matched)
            throw CoverageError("subject " + s.id + ": " + std::to_string(s.pairs.size()) +
                                " answered questions match no question set");
    }
    return ds;
}

inline ChoiceDataset load_choices(const std::string& path, std::shared_ptr<const Battery> battery) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open choice file '" + path + "'");
    try {
        return load_choices(in, std::move(battery));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void write_choices(std::ostream& os, const ChoiceDataset& ds) {
    ds.validate();
    os << choices_header << '\n';
    for (const auto& s : ds.subjects)
        for (std::size_t k = 0; k < s.pairs.size(); ++k) {
            const auto& bp = (*ds.battery)[s.pairs[k]];
            os << s.id << ',' << bp.block << ',' << bp.question << ',' << to_char(s.responses[k]) << '\n';
        }
}

/// Parameters and question set of one simulated subject.
struct SubjectSpec {
    std::string id;
    ModelSpec model;
    QuestionSet question_set = QuestionSet::full_40;
};

/// PairModel for every battery pair under one (kind, family).
inline std::vector<PairModel> battery_models(ModelKind kind, UtilityFamily f, const Battery& battery,
                                             PairModelOptions opt, PremiumCurveCache* cache = nullptr) {
    std::vector<PairModel> out;
    out.reserve(battery.size());
    for (const auto& bp : battery.pairs()) {
        std::shared_ptr<const PremiumCurve> curve;
        if (cache && opt.interpolate_premium && (kind == ModelKind::pi_rum || kind == ModelKind::cum_pi_rum))
            curve = cache->get(bp.id(), f, bp.x, bp.y);
        try {
            out.emplace_back(kind, f, bp.x, bp.y, opt, std::move(curve));
        } catch (const Error& e) {
            throw Error("pair " + bp.id() + ": " + e.what());
        }
    }
    return out;
}

/// Draws every response of every subject from the subject's model (exact
/// premia, no interpolation). Subject i uses substream i of `seed`.
inline ChoiceDataset simulate_dataset(const std::vector<SubjectSpec>& specs, std::shared_ptr<const Battery> battery,
                                      std::uint64_t seed, unsigned threads = 0) {
    if (!battery) throw InvalidArgument("simulate_dataset needs a battery");
    using Key = std::pair<ModelKind, UtilityFamily>;
    std::map<Key, std::vector<PairModel>> models;
    for (const auto& s : specs) {
        s.model.params.validate();
        const Key key{s.model.kind, s.model.family};
        if (!models.count(key)) {
            PairModelOptions opt;
            opt.grid = parameter_grid(s.model.family);
            models.emplace(key, battery_models(key.first, key.second, *battery, opt));
        }
    }
    ChoiceDataset ds{battery, std::vector<Subject>(specs.size())};
    detail::parallel_for(specs.size(), threads, [&](std::size_t i) {
        const auto& spec = specs[i];
        const auto& bank = models.at({spec.model.kind, spec.model.family});
        detail::Rng rng(detail::stream_seed(seed, i));
        Subject s{spec.id, spec.question_set, battery->indices(spec.question_set), {}};
        for (auto j : s.pairs) {
            const double px = bank[j].probability(spec.model.params);
            s.responses.push_back(rng.uniform() < px ? Response::x : Response::y);
        }
        ds.subjects[i] = std::move(s);
    });
    return ds;
}

}  // namespace pirum
