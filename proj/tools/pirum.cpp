// Command-line front end: orderedness checks, premium curves, the battery,
// simulation, estimation, bootstrap and model comparison.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pirum/battery.hpp"
#include "pirum/choice_models.hpp"
#include "pirum/dataset.hpp"
#include "pirum/estimation.hpp"
#include "pirum/ordering.hpp"
#include "pirum/premium.hpp"

namespace {

using namespace pirum;

struct GridOpts {
    double lo = -20.0, hi = 20.0, step = 0.01;
    GridSpec spec() const { return {lo, hi, step}; }
};

void add_grid(CLI::App* sub, GridOpts& g) {
    sub->add_option("--grid-lo", g.lo, "Lowest risk parameter on the grid")->capture_default_str();
    sub->add_option("--grid-hi", g.hi, "Highest risk parameter on the grid")->capture_default_str();
    sub->add_option("--grid-step", g.step, "Grid step")->capture_default_str();
}

struct FitOpts {
    std::string data;
    std::string model = "pi";
    std::string family = "crra";
    std::string scheme = "hetero";
    std::uint64_t seed = 1;
    int pop = 50, gens = 100, outer_pop = 16, outer_gens = 12;
    unsigned threads = 0;
    bool exact = false;
    std::string out;

    EstimationSpec spec() const {
        EstimationSpec s;
        s.model = parse_model_kind(model);
        s.family = parse_family(family);
        s.scheme = parse_scheme(scheme);
        s.optimizer.seed = seed;
        s.optimizer.population = pop;
        s.optimizer.generations = gens;
        s.optimizer.outer_population = outer_pop;
        s.optimizer.outer_generations = outer_gens;
        s.optimizer.threads = threads;
        s.exact_premium = exact;
        return s;
    }
};

void add_fit(CLI::App* sub, FitOpts& f, bool with_model = true) {
    sub->add_option("--data", f.data, "Choice CSV (subject_id,block,question,response)")->required();
    if (with_model)
        sub->add_option("--model", f.model, "pi|ce|eu|cumpi|rpm|coneu")
            ->check(CLI::IsMember({"pi", "ce", "eu", "cumpi", "rpm", "coneu"}))
            ->capture_default_str();
    sub->add_option("--family", f.family, "crra|cara")->check(CLI::IsMember({"crra", "cara"}))->capture_default_str();
    sub->add_option("--seed", f.seed, "Optimizer seed")->capture_default_str();
    sub->add_option("--pop", f.pop, "GA population (3-parameter problems)")->check(CLI::Range(2, 100000))->capture_default_str();
    sub->add_option("--gens", f.gens, "GA generations (3-parameter problems)")->check(CLI::Range(0, 100000))->capture_default_str();
    sub->add_option("--outer-pop", f.outer_pop, "GA population (homoskedastic outer problem)")
        ->check(CLI::Range(2, 100000))
        ->capture_default_str();
    sub->add_option("--outer-gens", f.outer_gens, "GA generations (homoskedastic outer problem)")
        ->check(CLI::Range(0, 100000))
        ->capture_default_str();
    sub->add_option("--threads", f.threads, "Worker threads (0 = all)")->capture_default_str();
    sub->add_flag("--exact-premium", f.exact, "Solve premia exactly instead of interpolating");
}

// Output stream: the named file, or stdout when the name is empty.
class Output {
public:
    explicit Output(const std::string& path, std::ios::openmode mode = std::ios::out) {
        if (!path.empty()) {
            file_.open(path, mode);
            if (!file_) throw InvalidArgument("cannot open output file '" + path + "'");
        }
    }
    std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::pair<Lottery, Lottery> pair_arg(const std::string& text) {
    try {
        return parse_pair(text);
    } catch (const Error& e) {
        throw Error("pair '" + text + "': " + e.what());
    }
}

ChoiceDataset load_data(const std::string& path, UtilityFamily f) { return load_choices(path, andersen_battery(f)); }

void report_fit(const FitResult& r) {
    std::cerr << "model=" << to_string(r.model) << " scheme=" << to_string(r.scheme)
              << " loglik=" << detail::fmt_double(r.log_likelihood) << " evaluations=" << r.evaluations
              << " nonconverged_subjects=" << r.nonconverged() << " local_stage=\"" << r.message << "\"\n";
    for (const auto& e : r.estimates)
        if (!e.converged)
            std::cerr << "warning: subject " << e.subject_id << " did not reach the gradient tolerance (|g| = "
                      << detail::fmt_double(e.grad_norm) << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compensating-premium tools for stochastic choice under risk"};
    app.require_subcommand(1, 1);
    app.set_config("--config", "", "key=value configuration file (flags override it)");

    // order-check
    std::vector<std::string> oc_pairs, oc_ids;
    std::string oc_family = "crra";
    GridOpts oc_grid;
    auto* oc = app.add_subcommand("order-check", "Pi/Omega orderedness verdict for lottery pairs");
    oc->add_option("--pair", oc_pairs, "Pair as \"x:p,...|y:q,...\" (repeatable)")->required();
    oc->add_option("--id", oc_ids, "Pair ids, one per --pair");
    oc->add_option("--family", oc_family, "crra|cara")->check(CLI::IsMember({"crra", "cara"}))->capture_default_str();
    add_grid(oc, oc_grid);

    // premium-curve
    std::string pc_pair, pc_family = "crra", pc_out;
    bool pc_ce = false, pc_coneu = false;
    GridOpts pc_grid;
    auto* pc = app.add_subcommand("premium-curve", "Tabulate pi_theta(X, Y) on a grid");
    pc->add_option("--pair", pc_pair, "Pair as \"x:p,...|y:q,...\"")->required();
    pc->add_option("--family", pc_family, "crra|cara")->check(CLI::IsMember({"crra", "cara"}))->capture_default_str();
    pc->add_flag("--ce-diff", pc_ce, "Add a ce_diff column, CE(Y) - CE(X)");
    pc->add_flag("--coneu-diff", pc_coneu, "Add a coneu_diff column, contextual-utility index of Y minus X");
    pc->add_option("--out", pc_out, "Output CSV (default stdout)");
    add_grid(pc, pc_grid);

    // battery
    std::string bt_family = "crra", bt_out;
    auto* bt = app.add_subcommand("battery", "Print the 40-pair battery with indifference thresholds");
    bt->add_option("--family", bt_family, "crra|cara")->check(CLI::IsMember({"crra", "cara"}))->capture_default_str();
    bt->add_option("--out", bt_out, "Output CSV (default stdout)");

    // simulate
    std::string sm_model = "pi", sm_family = "crra", sm_set = "full", sm_out, sm_truth;
    std::optional<double> sm_theta;
    double sm_lo = -1.0, sm_hi = 2.0, sm_lambda = 0.003, sm_kappa = 0.05;
    int sm_n = 250;
    std::uint64_t sm_seed = 1;
    unsigned sm_threads = 0;
    auto* sm = app.add_subcommand("simulate", "Simulate battery choices from a model");
    sm->add_option("--model", sm_model, "pi|ce|eu|cumpi|rpm|coneu")
        ->check(CLI::IsMember({"pi", "ce", "eu", "cumpi", "rpm", "coneu"}))
        ->capture_default_str();
    sm->add_option("--family", sm_family, "crra|cara")->check(CLI::IsMember({"crra", "cara"}))->capture_default_str();
    auto* sm_theta_opt = sm->add_option("--theta", sm_theta, "Common risk parameter (otherwise uniform on [theta-lo, theta-hi])");
    sm->add_option("--theta-lo", sm_lo, "Lower end of the risk-parameter distribution")->excludes(sm_theta_opt)->capture_default_str();
    sm->add_option("--theta-hi", sm_hi, "Upper end of the risk-parameter distribution")->excludes(sm_theta_opt)->capture_default_str();
    sm->add_option("--lambda", sm_lambda, "Precision")->check(CLI::NonNegativeNumber)->capture_default_str();
    sm->add_option("--kappa", sm_kappa, "Tremble probability")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    sm->add_option("--n-subjects", sm_n, "Number of subjects")->check(CLI::PositiveNumber)->capture_default_str();
    sm->add_option("--question-set", sm_set, "full|a|b|mix (mix cycles full, a, b)")
        ->check(CLI::IsMember({"full", "a", "b", "mix"}))
        ->capture_default_str();
    sm->add_option("--seed", sm_seed, "Simulation seed")->capture_default_str();
    sm->add_option("--threads", sm_threads, "Worker threads (0 = all)")->capture_default_str();
    sm->add_option("--out", sm_out, "Choice CSV (default stdout)");
    sm->add_option("--truth-out", sm_truth, "Write the drawn parameters as CSV");

    // estimate
    FitOpts es;
    bool es_post = false;
    auto* est = app.add_subcommand("estimate", "Maximum-likelihood fit; writes subject_id,gamma,lambda,kappa,loglik,flag");
    add_fit(est, es);
    est->add_option("--scheme", es.scheme, "pooled|homo|hetero")
        ->check(CLI::IsMember({"pooled", "homo", "hetero"}))
        ->capture_default_str();
    est->add_flag("--postprocess", es_post, "Midpoint/+-5 rule for noiselessly consistent subjects (hetero)");
    est->add_option("--out", es.out, "Output CSV (default stdout)");

    // bootstrap
    FitOpts bs;
    bs.scheme = "pooled";
    int bs_reps = 0;
    std::uint64_t bs_seed = 1;
    auto* boot = app.add_subcommand("bootstrap", "Block bootstrap standard errors; appends a summary row");
    add_fit(boot, bs);
    boot->add_option("--scheme", bs.scheme, "pooled|homo")->check(CLI::IsMember({"pooled", "homo"}))->capture_default_str();
    boot->add_option("--reps", bs_reps, "Bootstrap replicates (>= 2)")->required();
    boot->add_option("--boot-seed", bs_seed, "Resampling seed")->capture_default_str();
    boot->add_option("--out", bs.out, "Summary CSV; rows are appended, header written when the file is new");

    // model-compare
    FitOpts mc;
    std::string mc_schemes = "both";
    auto* cmp = app.add_subcommand("model-compare", "Per-subject best-likelihood counts over EU, CE, Pi, RPM, ConEU");
    add_fit(cmp, mc, false);
    cmp->add_option("--schemes", mc_schemes, "hetero|homo|both")->check(CLI::IsMember({"hetero", "homo", "both"}))->capture_default_str();
    cmp->add_option("--out", mc.out, "Output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    std::cerr << "# effective configuration\n" << app.config_to_str(true, false);

    try {
        if (*oc) {
            if (!oc_ids.empty() && oc_ids.size() != oc_pairs.size()) {
                std::cerr << "error: give one --id per --pair\n";
                return 2;
            }
            const auto f = parse_family(oc_family);
            std::cout << verdict_header << '\n';
            for (std::size_t i = 0; i < oc_pairs.size(); ++i) {
                const auto id = oc_ids.empty() ? "pair" + std::to_string(i + 1) : oc_ids[i];
                const auto [x, y] = pair_arg(oc_pairs[i]);
                try {
                    std::cout << format_verdict(id, classify_pair(f, x, y, oc_grid.spec())) << '\n';
                } catch (const Error& e) {
                    throw Error("pair " + id + ": " + e.what());
                }
            }
        } else if (*pc) {
            const auto f = parse_family(pc_family);
            const auto [x, y] = pair_arg(pc_pair);
            const auto curve = build_premium_curve(f, x, y, pc_grid.spec());
            Output out(pc_out);
            auto& os = out.get();
            os << "theta,premium" << (pc_ce ? ",ce_diff" : "") << (pc_coneu ? ",coneu_diff" : "") << '\n';
            const Menu menu{x, y};
            for (std::size_t i = 0; i < curve.size(); ++i) {
                const double th = curve.grid()[i];
                os << detail::fmt_double(th) << ',' << detail::fmt_double(curve.values()[i]);
                if (pc_ce) os << ',' << detail::fmt_double(certainty_equivalent(f, th, y) - certainty_equivalent(f, th, x));
                if (pc_coneu) {
                    const auto v = value_index(ModelKind::con_eu, f, th, menu);
                    os << ',' << detail::fmt_double(v[1] - v[0]);
                }
                os << '\n';
            }
        } else if (*bt) {
            const auto f = parse_family(bt_family);
            const auto battery = andersen_battery(f);
            Output out(bt_out);
            battery->write_csv(out.get());
            for (auto qs : all_question_sets) {
                int n = 0;
                double lo = 0, hi = 0;
                for (auto j : battery->indices(qs)) {
                    const auto& t = (*battery)[j].threshold;
                    if (!t) continue;
                    lo = n ? std::min(lo, *t) : *t;
                    hi = n ? std::max(hi, *t) : *t;
                    ++n;
                }
                std::cerr << "question set " << to_string(qs) << ": " << n << " finite thresholds, min "
                          << detail::fmt_fixed(lo, 4) << ", max " << detail::fmt_fixed(hi, 4) << '\n';
            }
        } else if (*sm) {
            const auto f = parse_family(sm_family);
            const auto kind = parse_model_kind(sm_model);
            detail::Rng draw(detail::stream_seed(sm_seed, ~std::uint64_t{0}));
            std::vector<SubjectSpec> specs;
            const std::array<QuestionSet, 3> cycle{QuestionSet::full_40, QuestionSet::subset_a, QuestionSet::subset_b};
            const int width = static_cast<int>(std::to_string(sm_n).size());
            for (int i = 0; i < sm_n; ++i) {
                ModelSpec m;
                m.kind = kind;
                m.family = f;
                m.params = {sm_theta ? *sm_theta : draw.uniform(sm_lo, sm_hi), sm_lambda, sm_kappa};
                auto id = std::to_string(i + 1);
                id = "s" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
                const auto qs = sm_set == "mix" ? cycle[static_cast<std::size_t>(i) % 3] : parse_question_set(sm_set);
                specs.push_back({id, m, qs});
            }
            const auto ds = simulate_dataset(specs, andersen_battery(f), sm_seed, sm_threads);
            Output out(sm_out);
            write_choices(out.get(), ds);
            if (!sm_truth.empty()) {
                Output truth(sm_truth);
                truth.get() << "subject_id,gamma,lambda,kappa\n";
                for (const auto& s : specs)
                    truth.get() << s.id << ',' << detail::fmt_double(s.model.params.theta) << ','
                                << detail::fmt_double(s.model.params.lambda) << ','
                                << detail::fmt_double(s.model.params.kappa) << '\n';
            }
        } else if (*est) {
            const auto spec = es.spec();
            const auto ds = load_data(es.data, spec.family);
            auto result = fit(spec, ds);
            if (es_post) result = postprocess_consistent(std::move(result), ds);
            report_fit(result);
            Output out(es.out);
            write_fit_csv(out.get(), result);
        } else if (*boot) {
            if (bs_reps < 2) {
                std::cerr << "error: --reps must be at least 2\n";
                return 2;
            }
            const auto spec = bs.spec();
            const auto ds = load_data(bs.data, spec.family);
            const LikelihoodModel model(spec, *ds.battery);
            const auto b = block_bootstrap(model, spec, ds, bs_reps, bs_seed);
            std::cerr << "bootstrap: " << b.reps - b.failed << " of " << b.reps << " replicates succeeded\n";
            const bool fresh = bs.out.empty() || !std::filesystem::exists(bs.out) || std::filesystem::file_size(bs.out) == 0;
            Output out(bs.out, std::ios::app);
            if (fresh) out.get() << summary_header << '\n';
            write_summary_row(out.get(), spec.model, b);
        } else if (*cmp) {
            const auto family = parse_family(mc.family);
            const auto ds = load_data(mc.data, family);
            const std::vector<ModelKind> kinds{ModelKind::eu_rum, ModelKind::ce_rum, ModelKind::pi_rum, ModelKind::rpm,
                                               ModelKind::con_eu};
            std::vector<Scheme> schemes;
            if (mc_schemes != "homo") schemes.push_back(Scheme::hetero);
            if (mc_schemes != "hetero") schemes.push_back(Scheme::homo);
            Output out(mc.out);
            out.get() << "scheme,eu,ce,pi,rpm,coneu\n";
            for (auto scheme : schemes) {
                std::vector<FitResult> fits;
                for (auto k : kinds) {
                    auto o = mc;
                    o.model = std::string(to_string(k));
                    o.scheme = std::string(to_string(scheme));
                    const auto spec = o.spec();
                    fits.push_back(fit(spec, ds));
                    report_fit(fits.back());
                }
                const auto counts = best_model_counts(fits);
                out.get() << to_string(scheme);
                for (int c : counts) out.get() << ',' << c;
                out.get() << '\n';
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
