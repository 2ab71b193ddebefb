#pragma once

// The 40-pair multiple price list battery (four blocks of ten questions) and
// the question subsets some subjects received.

#include <algorithm>
#include <array>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pirum/detail/csv.hpp"
#include "pirum/detail/text.hpp"
#include "pirum/errors.hpp"
#include "pirum/lottery.hpp"
#include "pirum/ordering.hpp"
#include "pirum/premium.hpp"

namespace pirum {

/// Risk-parameter range used for threshold searches and estimation boxes.
/// CARA coefficients are per payoff unit, so with payoffs in the thousands the
/// interesting range is much narrower than for CRRA.
inline GridSpec parameter_grid(UtilityFamily f) {
    if (f == UtilityFamily::crra) return {-20.0, 20.0, 0.01};
    return {-0.02, 0.02, 1e-5};
}

struct BlockPayoffs {
    double x_hi, x_lo, y_hi, y_lo;
};

/// Payoffs of the four blocks; X = {x_hi: p, x_lo: 1-p}, Y = {y_hi: p, y_lo: 1-p}.
inline constexpr std::array<BlockPayoffs, 4> andersen_payoffs{{
    {3850, 100, 2000, 1600},
    {4000, 500, 2250, 1500},
    {4000, 150, 2000, 1750},
    {4500, 50, 2500, 1000},
}};

struct BatteryPair {
    int block = 0;
    int question = 0;
    double p = 0.0;
    BlockPayoffs payoffs{};
    Lottery x;
    Lottery y;
    std::optional<double> threshold;  // indifference parameter, X preferred below

    std::string id() const { return "b" + std::to_string(block) + "q" + std::to_string(question); }
};

enum class QuestionSet { full_40, subset_a, subset_b };

inline std::string_view to_string(QuestionSet s) {
    switch (s) {
        case QuestionSet::full_40: return "full";
        case QuestionSet::subset_a: return "a";
        case QuestionSet::subset_b: return "b";
    }
    return "?";
}

inline QuestionSet parse_question_set(std::string_view s) {
    if (s == "full") return QuestionSet::full_40;
    if (s == "a") return QuestionSet::subset_a;
    if (s == "b") return QuestionSet::subset_b;
    throw InvalidArgument("unknown question set '" + std::string(s) + "' (expected full|a|b)");
}

/// Question numbers asked in every block.
inline std::vector<int> questions(QuestionSet s) {
    switch (s) {
        case QuestionSet::full_40: return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
        case QuestionSet::subset_a: return {3, 5, 7, 8, 9, 10};
        case QuestionSet::subset_b: return {1, 2, 3, 5, 7, 10};
    }
    return {};
}

inline constexpr std::array<QuestionSet, 3> all_question_sets{QuestionSet::full_40, QuestionSet::subset_a,
                                                              QuestionSet::subset_b};

inline std::pair<Lottery, Lottery> block_pair(const BlockPayoffs& b, int question) {
    if (question == 10) return {Lottery::degenerate(b.x_hi), Lottery::degenerate(b.y_hi)};
    const double p = question / 10.0;
    return {Lottery({b.x_hi, b.x_lo}, {p, 1.0 - p}), Lottery({b.y_hi, b.y_lo}, {p, 1.0 - p})};
}

class Battery {
public:
    Battery(std::vector<BatteryPair> pairs, UtilityFamily family) : pairs_(std::move(pairs)), family_(family) {
        for (std::size_t i = 0; i < pairs_.size(); ++i) {
            const auto key = std::make_pair(pairs_[i].block, pairs_[i].question);
            if (!index_.emplace(key, i).second) throw InvalidArgument("duplicate battery pair " + pairs_[i].id());
        }
    }

    const std::vector<BatteryPair>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }
    const BatteryPair& operator[](std::size_t i) const { return pairs_.at(i); }
    /// Family the thresholds refer to.
    UtilityFamily family() const { return family_; }

    std::optional<std::size_t> find(int block, int question) const {
        auto it = index_.find({block, question});
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// Battery indices of a question set, block-major.
    std::vector<std::size_t> indices(QuestionSet s) const {
        std::vector<std::size_t> out;
        for (int b = 1; b <= 4; ++b)
            for (int q : questions(s)) {
                auto i = find(b, q);
                if (!i) throw InvalidArgument("battery lacks question " + std::to_string(q) + " of block " + std::to_string(b));
                out.push_back(*i);
            }
        std::sort(out.begin(), out.end());
        return out;
    }

    static constexpr std::string_view csv_header = "block,question,p,x_hi,x_lo,y_hi,y_lo,threshold_gamma";

    void write_csv(std::ostream& os) const {
        os << csv_header << '\n';
        for (const auto& bp : pairs_) {
            os << bp.block << ',' << bp.question << ',' << detail::fmt_double(bp.p) << ',' << detail::fmt_double(bp.payoffs.x_hi)
               << ',' << detail::fmt_double(bp.payoffs.x_lo) << ',' << detail::fmt_double(bp.payoffs.y_hi) << ','
               << detail::fmt_double(bp.payoffs.y_lo) << ',';
            if (bp.threshold) os << detail::fmt_double(*bp.threshold);
            os << '\n';
        }
    }

private:
    std::vector<BatteryPair> pairs_;
    UtilityFamily family_;
    std::map<std::pair<int, int>, std::size_t> index_;
};

/// Four blocks of ten questions with thresholds solved under `f`.
inline Battery make_battery(const std::array<BlockPayoffs, 4>& blocks, UtilityFamily f) {
    std::vector<BatteryPair> pairs;
    const auto grid = parameter_grid(f);
    for (int b = 1; b <= 4; ++b) {
        for (int q = 1; q <= 10; ++q) {
            auto [x, y] = block_pair(blocks[b - 1], q);
            BatteryPair bp{b, q, q / 10.0, blocks[b - 1], x, y, std::nullopt};
            bp.threshold = indifference_threshold(f, x, y, grid, 1e-12);
            pairs.push_back(std::move(bp));
        }
    }
    return Battery(std::move(pairs), f);
}

/// The built-in battery, built once per family.
inline std::shared_ptr<const Battery> andersen_battery(UtilityFamily f = UtilityFamily::crra) {
    static std::mutex m;
    static std::map<UtilityFamily, std::shared_ptr<const Battery>> cache;
    std::lock_guard lock(m);
    auto& slot = cache[f];
    if (!slot) slot = std::make_shared<const Battery>(make_battery(andersen_payoffs, f));
    return slot;
}

/// Reads a battery CSV as written by Battery::write_csv. Thresholds are taken
/// as stored.
inline Battery read_battery_csv(std::istream& in, UtilityFamily f) {
    std::vector<BatteryPair> pairs;
    for (const auto& row : detail::read_csv(in, Battery::csv_header)) {
        try {
            const auto& c = row.fields;
            const int block = static_cast<int>(detail::parse_double(c[0], "block"));
            const int question = static_cast<int>(detail::parse_double(c[1], "question"));
            const double p = detail::parse_double(c[2], "p");
            const BlockPayoffs pay{detail::parse_double(c[3], "x_hi"), detail::parse_double(c[4], "x_lo"),
                                   detail::parse_double(c[5], "y_hi"), detail::parse_double(c[6], "y_lo")};
            auto x = p == 1.0 ? Lottery::degenerate(pay.x_hi) : Lottery({pay.x_hi, pay.x_lo}, {p, 1.0 - p});
            auto y = p == 1.0 ? Lottery::degenerate(pay.y_hi) : Lottery({pay.y_hi, pay.y_lo}, {p, 1.0 - p});
            BatteryPair bp{block, question, p, pay, std::move(x), std::move(y), std::nullopt};
            if (!c[7].empty()) bp.threshold = detail::parse_double(c[7], "threshold_gamma");
            pairs.push_back(std::move(bp));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), row.line);
        } catch (const InvalidArgument& e) {
            throw ParseError(e.what(), row.line);
        }
    }
    return Battery(std::move(pairs), f);
}

}  // namespace pirum
