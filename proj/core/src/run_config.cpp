#include "diffkit/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "diffkit/errors.hpp"

namespace diffkit {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& scope,
                    const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError(scope.empty() ? it.key() : scope + "." + it.key(),
                              "unknown field");
    }
}

ScheduleSpec parse_schedule(const json& obj) {
    ScheduleSpec spec;
    if (obj.contains("alphas")) {
        reject_unknown(obj, "schedule", {"alphas"});
        spec.alphas = obj.at("alphas").get<std::vector<double>>();
        return spec;
    }
    reject_unknown(obj, "schedule", {"T", "beta_start", "beta_end"});
    if (!obj.contains("T")) throw ConfigError("schedule.T", "required");
    spec.T = obj.at("T").get<int>();
    if (obj.contains("beta_start")) spec.beta_start = obj.at("beta_start").get<double>();
    if (obj.contains("beta_end")) spec.beta_end = obj.at("beta_end").get<double>();
    return spec;
}

DataSpec parse_data(const json& obj) {
    DataSpec spec;
    if (obj.contains("points")) {
        reject_unknown(obj, "data", {"points"});
        const auto pts = obj.at("points").get<std::vector<std::vector<double>>>();
        if (pts.empty()) throw ConfigError("data.points", "must be non-empty");
        const std::size_t d = pts[0].size();
        if (d == 0) throw ConfigError("data.points", "points must have dimension >= 1");
        Eigen::MatrixXd means(pts.size(), d);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pts[i].size() != d)
                throw ConfigError("data.points", "ragged point list");
            for (std::size_t j = 0; j < d; ++j) means(i, j) = pts[i][j];
        }
        spec.kind = DataSpec::Kind::Points;
        spec.mixture.weights =
            Eigen::VectorXd::Constant(static_cast<Eigen::Index>(pts.size()),
                                      1.0 / static_cast<double>(pts.size()));
        spec.mixture.means = std::move(means);
        spec.mixture.component_std = 0.0;
        return spec;
    }

    reject_unknown(obj, "data", {"weights", "means", "component_std"});
    if (!obj.contains("means")) throw ConfigError("data.means", "required");
    const auto means_in = obj.at("means").get<std::vector<std::vector<double>>>();
    if (means_in.empty()) throw ConfigError("data.means", "must be non-empty");
    const std::size_t d = means_in[0].size();
    Eigen::MatrixXd means(means_in.size(), d);
    for (std::size_t i = 0; i < means_in.size(); ++i) {
        if (means_in[i].size() != d) throw ConfigError("data.means", "ragged mean list");
        for (std::size_t j = 0; j < d; ++j) means(i, j) = means_in[i][j];
    }
    spec.kind = DataSpec::Kind::Mixture;
    spec.mixture.means = std::move(means);
    if (obj.contains("weights")) {
        const auto w = obj.at("weights").get<std::vector<double>>();
        spec.mixture.weights =
            Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    } else {
        spec.mixture.weights = Eigen::VectorXd::Constant(
            static_cast<Eigen::Index>(means_in.size()), 1.0 / means_in.size());
    }
    spec.mixture.component_std =
        obj.contains("component_std") ? obj.at("component_std").get<double>() : 0.25;
    try {
        spec.mixture.validate();
    } catch (const std::exception& e) {
        throw ConfigError("data", e.what());
    }
    return spec;
}

ModelSpec parse_model(const json& obj) {
    ModelSpec spec;
    if (!obj.contains("kind")) throw ConfigError("model.kind", "required");
    const std::string kind = obj.at("kind").get<std::string>();
    if (kind == "analytic") {
        reject_unknown(obj, "model", {"kind"});
        spec.kind = ModelSpec::Kind::Analytic;
    } else if (kind == "checkpoint") {
        reject_unknown(obj, "model", {"kind", "path"});
        if (!obj.contains("path")) throw ConfigError("model.path", "required");
        spec.kind = ModelSpec::Kind::Checkpoint;
        spec.checkpoint_path = obj.at("path").get<std::string>();
        if (!std::filesystem::exists(spec.checkpoint_path))
            throw ConfigError("model.path",
                              "file does not exist: " + spec.checkpoint_path);
    } else if (kind == "train") {
        reject_unknown(obj, "model", {"kind", "steps", "batch", "lr", "hidden"});
        spec.kind = ModelSpec::Kind::Train;
        if (obj.contains("steps")) spec.train.steps = obj.at("steps").get<int>();
        if (obj.contains("batch")) spec.train.batch = obj.at("batch").get<int>();
        if (obj.contains("lr")) spec.train.lr = obj.at("lr").get<double>();
        if (obj.contains("hidden")) spec.train.hidden = obj.at("hidden").get<int>();
    } else {
        throw ConfigError("model.kind", "must be analytic | checkpoint | train, got '" + kind +
                                            "'");
    }
    return spec;
}

SamplerSpec parse_sampler(const json& obj) {
    reject_unknown(obj, "sampler", {"steps", "mode", "eta", "sigma_hat"});
    SamplerSpec spec;
    if (obj.contains("steps")) {
        if (obj.at("steps").is_array())
            spec.steps = obj.at("steps").get<std::vector<int>>();
        else
            spec.steps = {obj.at("steps").get<int>()};
    }
    if (spec.steps.empty()) throw ConfigError("sampler.steps", "must be non-empty");
    if (obj.contains("mode")) {
        try {
            spec.mode = spacing_mode_from_string(obj.at("mode").get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError("sampler.mode", e.what());
        }
    }
    const bool has_eta = obj.contains("eta");
    spec.use_sigma_hat = obj.contains("sigma_hat") && obj.at("sigma_hat").get<bool>();
    if (has_eta && spec.use_sigma_hat)
        throw ConfigError("sampler", "eta and sigma_hat are mutually exclusive");
    if (has_eta) {
        spec.eta = obj.at("eta").get<double>();
        if (spec.eta < 0.0) throw ConfigError("sampler.eta", "must be >= 0");
    }
    return spec;
}

} // namespace

NoiseSchedule RunConfig::build_schedule() const {
    try {
        if (!schedule.alphas.empty()) return NoiseSchedule::from_alphas(schedule.alphas);
        return make_linear_beta_schedule(schedule.T, schedule.beta_start, schedule.beta_end);
    } catch (const std::exception& e) {
        throw ConfigError("schedule", e.what());
    }
}

std::unique_ptr<DenoiserModel> RunConfig::build_model(const NoiseSchedule& ns) const {
    switch (model.kind) {
        case ModelSpec::Kind::Analytic:
            return std::make_unique<AnalyticMixtureDenoiser>(data.mixture, ns);
        case ModelSpec::Kind::Checkpoint:
            return std::make_unique<MlpDenoiser>(
                MlpDenoiser::load(model.checkpoint_path, schedule_hash_hex(ns)));
        case ModelSpec::Kind::Train: {
            TrainConfig train = model.train;
            train.seed = seed;
            return std::make_unique<MlpDenoiser>(train_toy_denoiser(data.mixture, ns, train));
        }
    }
    throw std::logic_error("unreachable");
}

SigmaPolicy RunConfig::build_policy() const {
    return sampler.use_sigma_hat ? SigmaPolicy::sigma_hat() : SigmaPolicy::eta(sampler.eta);
}

std::string RunConfig::policy_label() const { return build_policy().label(); }

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("<document>", "top level must be an object");
    reject_unknown(doc, "",
                   {"schedule", "data", "model", "sampler", "seed", "out", "chains", "plot",
                    "threads", "intermediates"});

    RunConfig config;
    if (!doc.contains("schedule")) throw ConfigError("schedule", "required");
    config.schedule = parse_schedule(doc.at("schedule"));
    if (!doc.contains("data")) throw ConfigError("data", "required");
    config.data = parse_data(doc.at("data"));
    config.model = doc.contains("model") ? parse_model(doc.at("model")) : ModelSpec{};
    config.sampler = doc.contains("sampler") ? parse_sampler(doc.at("sampler")) : SamplerSpec{};

    if (!doc.contains("seed"))
        throw ConfigError("seed", "required (runs take no implicit entropy)");
    config.seed = doc.at("seed").get<std::uint64_t>();

    if (doc.contains("out")) config.out = doc.at("out").get<std::string>();
    if (doc.contains("chains")) config.chains = doc.at("chains").get<int>();
    if (config.chains < 1) throw ConfigError("chains", "must be >= 1");
    if (doc.contains("plot")) config.plot = doc.at("plot").get<bool>();
    if (doc.contains("threads")) config.threads = doc.at("threads").get<int>();
    if (config.threads < 1) throw ConfigError("threads", "must be >= 1");
    if (doc.contains("intermediates"))
        config.intermediates = doc.at("intermediates").get<bool>();

    // Cross-field validation: steps fit the schedule, mixture dims line up.
    const NoiseSchedule ns = config.build_schedule();
    for (int S : config.sampler.steps) {
        if (S < 1 || S > ns.T())
            throw ConfigError("sampler.steps",
                              "S = " + std::to_string(S) + " outside [1, T = " +
                                  std::to_string(ns.T()) + "]");
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<document>", "cannot open config file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

void apply_overrides(RunConfig& config, const CliOverrides& overrides) {
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.steps) config.sampler.steps = *overrides.steps;
    if (overrides.eta && overrides.sigma_hat)
        throw ConfigError("sampler", "--eta and --sigma-hat are mutually exclusive");
    if (overrides.eta) {
        config.sampler.eta = *overrides.eta;
        config.sampler.use_sigma_hat = false;
    }
    if (overrides.sigma_hat) config.sampler.use_sigma_hat = true;
    if (overrides.mode) config.sampler.mode = *overrides.mode;
    if (overrides.out) config.out = *overrides.out;
    if (overrides.chains) {
        if (*overrides.chains < 1) throw ConfigError("chains", "must be >= 1");
        config.chains = *overrides.chains;
    }
    if (overrides.plot) config.plot = *overrides.plot;
}

} // namespace diffkit
