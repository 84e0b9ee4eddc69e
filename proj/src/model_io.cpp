#include "netobs/model_io.hpp"

#include "netobs/kvfile.hpp"

namespace netobs {

namespace {

StateVector parse_vector(const KvValue& value, const std::string& context) {
    const auto& arr = value.as_array(context);
    StateVector out(static_cast<long>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        out[static_cast<long>(i)] = arr[i].as_number(context + " entry");
    }
    return out;
}

LoadedModel load_mass_spring(const KvDocument& doc, const std::string& path) {
    LoadedModel out;
    out.type = "mass_spring";
    MassSpringConfig cfg;

    for (const auto& [key, value] : doc.root.entries) {
        if (key == "type") continue;
        if (key == "recommended_h") {
            out.recommended_h = value.as_number("recommended_h");
        } else {
            throw ParseError(path + ": unknown top-level key '" + key + "'");
        }
    }

    for (const KvTable* table : doc.tables_named("mass")) {
        MassSpringConfig::Mass mass;
        for (const auto& [key, value] : table->entries) {
            if (key == "m")
                mass.mass = value.as_number("mass m");
            else if (key == "y0")
                mass.position = value.as_number("mass y0");
            else if (key == "v0")
                mass.velocity = value.as_number("mass v0");
            else if (key == "mu")
                mass.friction = value.as_number("mass mu");
            else
                throw ParseError(path + ": unknown [[mass]] key '" + key + "'");
        }
        cfg.masses.push_back(mass);
    }

    for (const KvTable* table : doc.tables_named("spring")) {
        MassSpringConfig::Spring spring;
        bool has_j = false;
        for (const auto& [key, value] : table->entries) {
            if (key == "i")
                spring.node_i = static_cast<int>(value.as_integer("spring i")) - 1;
            else if (key == "j") {
                spring.node_j = static_cast<int>(value.as_integer("spring j")) - 1;
                has_j = true;
            } else if (key == "anchor")
                spring.anchor_height = value.as_number("spring anchor");
            else if (key == "k")
                spring.stiffness = value.as_number("spring k");
            else if (key == "l0")
                spring.rest_length = value.as_number("spring l0");
            else if (key == "d")
                spring.horizontal_offset = value.as_number("spring d");
            else
                throw ParseError(path + ": unknown [[spring]] key '" + key + "'");
        }
        if (!has_j) spring.node_j = -1;
        cfg.springs.push_back(spring);
    }

    for (const KvTable& t : doc.tables) {
        if (t.name != "mass" && t.name != "spring")
            throw ParseError(path + ": unknown table [[" + t.name + "]]");
    }

    out.model = make_mass_spring_model(cfg);
    const int m = static_cast<int>(cfg.masses.size());
    StateVector x0(2 * m);
    for (int i = 0; i < m; ++i) {
        x0[i] = cfg.masses[i].position;
        x0[m + i] = cfg.masses[i].velocity;
    }
    out.default_initial = x0;
    out.mass_spring = std::move(cfg);
    return out;
}

LoadedModel load_hill(const KvDocument& doc, const std::string& path) {
    LoadedModel out;
    out.type = "hill";
    HillNetworkConfig cfg;

    for (const auto& [key, value] : doc.root.entries) {
        if (key == "type") continue;
        if (key == "recommended_h") {
            out.recommended_h = value.as_number("recommended_h");
        } else if (key == "initial") {
            out.default_initial = parse_vector(value, "initial");
        } else {
            throw ParseError(path + ": unknown top-level key '" + key + "'");
        }
    }

    // First pass: node names, so inputs can refer to them.
    std::vector<const KvTable*> node_tables = doc.tables_named("node");
    for (const KvTable* table : node_tables) {
        HillNetworkConfig::Node node;
        node.name = table->at("name").as_string("node name");
        cfg.nodes.push_back(node);
    }
    auto node_index = [&](const std::string& name, int line) {
        for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
            if (cfg.nodes[i].name == name) return static_cast<int>(i);
        }
        throw ParseError(path + ": line " + std::to_string(line) + ": unknown node '" + name +
                         "'");
    };

    auto parse_inputs = [&](const KvValue& value, bool inhibitor, const std::string& ctx) {
        std::vector<HillNetworkConfig::Input> inputs;
        for (const KvValue& entry : value.as_array(ctx)) {
            HillNetworkConfig::Input input;
            input.inhibitor = inhibitor;
            if (entry.kind == KvValue::Kind::String) {
                input.source = node_index(entry.text, entry.line);
            } else {
                for (const auto& [k, v] : entry.as_map(ctx)) {
                    if (k == "from")
                        input.source = node_index(v.as_string(ctx + ".from"), v.line);
                    else if (k == "m")
                        input.exponent = v.as_number(ctx + ".m");
                    else if (k == "theta")
                        input.threshold = v.as_number(ctx + ".theta");
                    else
                        throw ParseError(ctx + ": unknown input key '" + k + "'");
                }
            }
            inputs.push_back(input);
        }
        return inputs;
    };

    for (std::size_t t = 0; t < node_tables.size(); ++t) {
        const KvTable* table = node_tables[t];
        HillNetworkConfig::Node& node = cfg.nodes[t];
        for (const auto& [key, value] : table->entries) {
            if (key == "name") continue;
            if (key == "decay") {
                node.decay = value.as_number("node decay");
            } else if (key == "activators") {
                auto ins = parse_inputs(value, false, path + ": activators");
                node.inputs.insert(node.inputs.end(), ins.begin(), ins.end());
            } else if (key == "inhibitors") {
                auto ins = parse_inputs(value, true, path + ": inhibitors");
                node.inputs.insert(node.inputs.end(), ins.begin(), ins.end());
            } else {
                throw ParseError(path + ": unknown [[node]] key '" + key + "'");
            }
        }
    }

    for (const KvTable& t : doc.tables) {
        if (t.name != "node") throw ParseError(path + ": unknown table [[" + t.name + "]]");
    }

    out.model = make_hill_model(cfg);
    return out;
}

}  // namespace

LoadedModel load_model(const std::string& path) {
    const KvDocument doc = parse_kv_file(path);
    const KvValue* type = doc.root.find("type");
    const std::string kind = type ? type->as_string("type") : "reaction";

    if (kind == "reaction") {
        ReactionMechanism mech = load_mechanism(path);
        LoadedModel out;
        out.type = "reaction";
        out.model = mechanism_to_model(mech);
        out.recommended_h = mech.recommended_h;
        out.default_initial = mech.default_initial;
        out.conservation = mech.conservation;
        return out;
    }
    if (kind == "mass_spring") return load_mass_spring(doc, path);
    if (kind == "hill") return load_hill(doc, path);
    throw ParseError(path + ": unknown model type \"" + kind + "\"");
}

}  // namespace netobs
