#include "adamwarm/cli/json_config.hpp"

#include <nlohmann/json.hpp>

namespace adamwarm::cli {

namespace {

using nlohmann::json;

std::string scalar_text(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError(key, "config value must be a string, number, boolean or flat array");
}

void flatten(const json& obj, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
        if (value.is_null()) continue;
        if (value.is_object()) {
            parents.push_back(key);
            items.push_back({parents, "++", {}});
            flatten(value, parents, items);
            items.push_back({parents, "--", {}});
            parents.pop_back();
            continue;
        }
        CLI::ConfigItem item{parents, key, {}};
        if (value.is_array()) {
            for (const auto& e : value) item.inputs.push_back(scalar_text(e, key));
        } else {
            item.inputs.push_back(scalar_text(value, key));
        }
        items.push_back(std::move(item));
    }
}

json app_to_json(const CLI::App* app, bool default_also) {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
        const std::string& name = opt->get_single_name();
        if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
        std::vector<std::string> values = opt->reduced_results();
        if (values.empty() && default_also && !opt->get_default_str().empty()) {
            values = {opt->get_default_str()};
        }
        if (values.empty()) continue;
        if (opt->get_expected_min() == 0) {
            j[name] = CLI::detail::to_flag_value(values.front()) > 0;
        } else if (values.size() == 1 && opt->get_expected_max() <= 1) {
            j[name] = values.front();
        } else {
            j[name] = values;
        }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
        if (sub->count() == 0 && !default_also) continue;
        json inner = app_to_json(sub, default_also);
        if (!inner.empty()) j[sub->get_name()] = std::move(inner);
    }
    return j;
}

} // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
    return app_to_json(app, default_also).dump(2) + "\n";
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
    json j;
    try {
        j = json::parse(input);
    } catch (const json::parse_error& e) {
        throw CLI::ConversionError("config", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config", "top level must be an object");
    if (j.contains("command") && j.contains("config") && j["command"].is_string()) {
        j = json{{j["command"].get<std::string>(), j["config"]}};
    }
    std::vector<CLI::ConfigItem> items;
    std::vector<std::string> parents;
    flatten(j, parents, items);
    return items;
}

} // namespace adamwarm::cli
