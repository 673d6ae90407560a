#include "banditrl/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "banditrl/errors.hpp"
#include "banditrl/text.hpp"

namespace banditrl {

namespace {

std::vector<int> parse_int_list(std::string_view text)
{
    std::vector<int> out;
    if (trim(text).empty()) return out;
    for (const auto& part : split(text, ',')) out.push_back(static_cast<int>(parse_int(part)));
    return out;
}

std::vector<double> parse_double_list(std::string_view text)
{
    std::vector<double> out;
    if (trim(text).empty()) return out;
    for (const auto& part : split(text, ',')) out.push_back(parse_double(part));
    return out;
}

bool parse_bool(std::string_view text)
{
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("not a boolean: '" + std::string(text) + "'");
}

template <typename T>
std::string join(const std::vector<T>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_same_v<T, double>)
            out += format_double(values[i]);
        else if constexpr (std::is_same_v<T, std::string>)
            out += values[i];
        else
            out += std::to_string(values[i]);
    }
    return out;
}

void apply_arm_key(AgentConfig& arm, std::string_view field, std::string_view value)
{
    if (field == "label") arm.label = std::string(trim(value));
    else if (field == "hidden_layers") arm.hidden_layers = parse_int_list(value);
    else if (field == "learning_rate") arm.learning_rate = parse_double(value);
    else if (field == "discount") arm.discount = parse_double(value);
    else if (field == "epsilon_start") arm.epsilon_start = parse_double(value);
    else if (field == "epsilon_end") arm.epsilon_end = parse_double(value);
    else if (field == "epsilon_decay_steps") arm.epsilon_decay_steps = static_cast<int>(parse_int(value));
    else if (field == "replay_capacity") arm.replay_capacity = static_cast<int>(parse_int(value));
    else if (field == "batch_size") arm.batch_size = static_cast<int>(parse_int(value));
    else if (field == "target_sync_interval") arm.target_sync_interval = static_cast<int>(parse_int(value));
    else if (field == "update_interval") arm.update_interval = static_cast<int>(parse_int(value));
    else if (field == "optimizer") {
        const auto v = trim(value);
        if (v == "adam") arm.optimizer = OptimizerKind::Adam;
        else if (v == "sgd") arm.optimizer = OptimizerKind::Sgd;
        else throw ConfigError("unknown optimizer '" + std::string(v) + "'");
    } else if (field == "use_bias") arm.use_bias = parse_bool(value);
    else throw ConfigError("unknown arm key '" + std::string(field) + "'");
}

}  // namespace

void DynamicsConfig::validate() const
{
    for (int h : hidden_layers)
        if (h <= 0) throw ConfigError("dynamics.hidden_layers must be positive");
    if (!(prior_std > 0.0)) throw ConfigError("dynamics.prior_std must be positive");
    if (!(obs_std > 0.0)) throw ConfigError("dynamics.obs_std must be positive");
    if (!(learning_rate >= 0.0)) throw ConfigError("dynamics.learning_rate must be nonnegative");
    if (train_steps < 1) throw ConfigError("dynamics.train_steps must be positive");
    if (batch_size < 1) throw ConfigError("dynamics.batch_size must be positive");
}

void ExperimentConfig::validate() const
{
    if (arms.size() < 2) throw ConfigError("need at least two arms");
    if (window_episodes < 1) throw ConfigError("window_episodes must be positive");
    if (total_windows < 1) throw ConfigError("total_windows must be positive");
    if (total_windows < static_cast<int>(arms.size()))
        throw ConfigError("total_windows must be at least the number of arms");
    if (n_runs < 1) throw ConfigError("n_runs must be positive");
    if (calibration_runs < 0) throw ConfigError("calibration_runs must be nonnegative");
    if (strategies.empty()) throw ConfigError("no strategies given");
    const int k = static_cast<int>(arms.size());
    if (oracle_arm && (*oracle_arm < 0 || *oracle_arm >= k)) throw ConfigError("oracle_arm out of range");
    if (worst_arm && (*worst_arm < 0 || *worst_arm >= k)) throw ConfigError("worst_arm out of range");
    if (!arm_means.empty() && arm_means.size() != arms.size())
        throw ConfigError("arm_means must list one value per arm");
    for (const auto& arm : arms) {
        if (arm.label.empty() || arm.label.find_first_of(",;\n\"") != std::string::npos)
            throw ConfigError("arm labels must be nonempty and free of , ; quotes and newlines");
        try {
            arm.validate();
        } catch (const InvalidConfig& e) {
            throw ConfigError(e.what());
        }
    }
    try {
        surrogate.validate();
        bandit.validate(k);
    } catch (const InvalidConfig& e) {
        throw ConfigError(e.what());
    }
    dynamics.validate();
    for (const auto& name : strategies) {
        if (name == "best" || name == "worst") continue;  // checked once resolved
        resolve_strategy(name);
    }
}

bool ExperimentConfig::needs_calibration() const
{
    if (oracle_arm) return false;
    return std::any_of(strategies.begin(), strategies.end(),
                       [](const std::string& s) { return s == "best" || s == "worst"; });
}

StrategySpec ExperimentConfig::resolve_strategy(std::string_view name) const
{
    StrategySpec spec;
    spec.name = std::string(name);
    const int k = static_cast<int>(arms.size());
    if (name == "best" || name == "worst") {
        const auto& arm = name == "best" ? oracle_arm : worst_arm;
        if (!arm) throw ConfigError("strategy '" + spec.name + "' needs a calibrated arm");
        spec.strategy = Strategy::FixedArm;
        spec.fixed_index = *arm;
        return spec;
    }
    if (name.starts_with("fixed") && name.size() > 5) {
        spec.strategy = Strategy::FixedArm;
        spec.fixed_index = static_cast<int>(parse_int(name.substr(5)));
        if (spec.fixed_index < 0 || spec.fixed_index >= k)
            throw ConfigError("strategy '" + spec.name + "' names an unknown arm");
        return spec;
    }
    spec.strategy = strategy_from_string(name);
    if (spec.strategy == Strategy::FixedArm) throw ConfigError("use best, worst or fixed<k> for fixed arms");
    return spec;
}

std::vector<StrategySpec> ExperimentConfig::resolved_strategies() const
{
    std::vector<StrategySpec> out;
    for (const auto& name : strategies) out.push_back(resolve_strategy(name));
    return out;
}

ExperimentConfig parse_config(std::string_view text)
{
    std::map<std::string, std::string> values;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key(trim(line.substr(0, eq)));
        if (values.contains(key)) throw ConfigError("duplicate key '" + key + "'");
        values[key] = std::string(trim(line.substr(eq + 1)));
    }

    ExperimentConfig config;
    if (auto it = values.find("env"); it != values.end()) config.env = env_kind_from_string(it->second);

    // Arms: arm.<index>.<field>
    std::map<int, std::vector<std::pair<std::string, std::string>>> arm_keys;
    int declared_arms = -1;
    for (const auto& [key, value] : values) {
        if (key == "arms") {
            declared_arms = static_cast<int>(parse_int(value));
            continue;
        }
        if (!key.starts_with("arm.")) continue;
        const auto dot = key.find('.', 4);
        if (dot == std::string::npos) throw ConfigError("malformed arm key '" + key + "'");
        const int index = static_cast<int>(parse_int(std::string_view(key).substr(4, dot - 4)));
        if (index < 0) throw ConfigError("negative arm index in '" + key + "'");
        arm_keys[index].emplace_back(key.substr(dot + 1), value);
    }
    if (arm_keys.empty() && declared_arms < 0) {
        config.arms = default_pool(config.env);
    } else {
        const int count = declared_arms >= 0 ? declared_arms : arm_keys.rbegin()->first + 1;
        if (!arm_keys.empty() && arm_keys.rbegin()->first >= count)
            throw ConfigError("arm index exceeds the declared arm count");
        config.arms.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) config.arms[static_cast<std::size_t>(i)].label = "arm" + std::to_string(i);
        for (const auto& [index, fields] : arm_keys)
            for (const auto& [field, value] : fields) apply_arm_key(config.arms[static_cast<std::size_t>(index)], field, value);
    }

    for (const auto& [key, value] : values) {
        if (key == "env" || key == "arms" || key.starts_with("arm.")) continue;
        if (key == "window_episodes") config.window_episodes = static_cast<int>(parse_int(value));
        else if (key == "total_windows") config.total_windows = static_cast<int>(parse_int(value));
        else if (key == "n_runs") config.n_runs = static_cast<int>(parse_int(value));
        else if (key == "calibration_runs") config.calibration_runs = static_cast<int>(parse_int(value));
        else if (key == "master_seed") config.master_seed = static_cast<std::uint64_t>(parse_int(value));
        else if (key == "strategies") config.strategies = split(value, ',');
        else if (key == "oracle_arm") {
            if (value == "calibrate") config.oracle_arm.reset();
            else config.oracle_arm = static_cast<int>(parse_int(value));
        } else if (key == "worst_arm") {
            if (value.empty()) config.worst_arm.reset();
            else config.worst_arm = static_cast<int>(parse_int(value));
        } else if (key == "arm_means") config.arm_means = parse_double_list(value);
        else if (key == "output_dir") config.output_dir = value;
        else if (key == "threads") config.threads = static_cast<int>(parse_int(value));
        else if (key == "surrogate.eta") config.surrogate.eta = parse_double(value);
        else if (key == "surrogate.ma_window") config.surrogate.ma_window = static_cast<int>(parse_int(value));
        else if (key == "surrogate.clip") config.surrogate.clip = parse_bool(value);
        else if (key == "dynamics.hidden_layers") config.dynamics.hidden_layers = parse_int_list(value);
        else if (key == "dynamics.prior_std") config.dynamics.prior_std = parse_double(value);
        else if (key == "dynamics.obs_std") config.dynamics.obs_std = parse_double(value);
        else if (key == "dynamics.learning_rate") config.dynamics.learning_rate = parse_double(value);
        else if (key == "dynamics.train_steps") config.dynamics.train_steps = static_cast<int>(parse_int(value));
        else if (key == "dynamics.batch_size") config.dynamics.batch_size = static_cast<int>(parse_int(value));
        else if (key == "bandit.epsilon") config.bandit.epsilon = parse_double(value);
        else if (key == "bandit.tau") config.bandit.tau = parse_double(value);
        else if (key == "bandit.ucb_c") config.bandit.ucb_c = parse_double(value);
        else if (key == "bandit.exp3_gamma") config.bandit.exp3_gamma = parse_double(value);
        else throw ConfigError("unknown key '" + key + "'");
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string to_text(const ExperimentConfig& c)
{
    std::ostringstream os;
    os << "env = " << to_string(c.env) << '\n';
    os << "window_episodes = " << c.window_episodes << '\n';
    os << "total_windows = " << c.total_windows << '\n';
    os << "n_runs = " << c.n_runs << '\n';
    os << "calibration_runs = " << c.calibration_runs << '\n';
    os << "master_seed = " << c.master_seed << '\n';
    os << "strategies = " << join(c.strategies) << '\n';
    os << "oracle_arm = " << (c.oracle_arm ? std::to_string(*c.oracle_arm) : "calibrate") << '\n';
    os << "worst_arm = " << (c.worst_arm ? std::to_string(*c.worst_arm) : "") << '\n';
    os << "arm_means = " << join(c.arm_means) << '\n';
    os << "output_dir = " << c.output_dir.string() << '\n';
    os << "threads = " << c.threads << '\n';
    os << "surrogate.eta = " << format_double(c.surrogate.eta) << '\n';
    os << "surrogate.ma_window = " << c.surrogate.ma_window << '\n';
    os << "surrogate.clip = " << (c.surrogate.clip ? "true" : "false") << '\n';
    os << "dynamics.hidden_layers = " << join(c.dynamics.hidden_layers) << '\n';
    os << "dynamics.prior_std = " << format_double(c.dynamics.prior_std) << '\n';
    os << "dynamics.obs_std = " << format_double(c.dynamics.obs_std) << '\n';
    os << "dynamics.learning_rate = " << format_double(c.dynamics.learning_rate) << '\n';
    os << "dynamics.train_steps = " << c.dynamics.train_steps << '\n';
    os << "dynamics.batch_size = " << c.dynamics.batch_size << '\n';
    os << "bandit.epsilon = " << format_double(c.bandit.epsilon) << '\n';
    os << "bandit.tau = " << format_double(c.bandit.tau) << '\n';
    os << "bandit.ucb_c = " << format_double(c.bandit.ucb_c) << '\n';
    os << "bandit.exp3_gamma = " << format_double(c.bandit.exp3_gamma) << '\n';
    os << "arms = " << c.arms.size() << '\n';
    for (std::size_t i = 0; i < c.arms.size(); ++i) {
        const auto& a = c.arms[i];
        const std::string p = "arm." + std::to_string(i) + ".";
        os << p << "label = " << a.label << '\n';
        os << p << "hidden_layers = " << join(a.hidden_layers) << '\n';
        os << p << "learning_rate = " << format_double(a.learning_rate) << '\n';
        os << p << "discount = " << format_double(a.discount) << '\n';
        os << p << "epsilon_start = " << format_double(a.epsilon_start) << '\n';
        os << p << "epsilon_end = " << format_double(a.epsilon_end) << '\n';
        os << p << "epsilon_decay_steps = " << a.epsilon_decay_steps << '\n';
        os << p << "replay_capacity = " << a.replay_capacity << '\n';
        os << p << "batch_size = " << a.batch_size << '\n';
        os << p << "target_sync_interval = " << a.target_sync_interval << '\n';
        os << p << "update_interval = " << a.update_interval << '\n';
        os << p << "optimizer = " << (a.optimizer == OptimizerKind::Adam ? "adam" : "sgd") << '\n';
        os << p << "use_bias = " << (a.use_bias ? "true" : "false") << '\n';
    }
    return os.str();
}

}  // namespace banditrl
