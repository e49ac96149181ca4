#include "ks/diagram.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ks/jsonfmt.hpp"

namespace ks {

Diagram Diagram::make(std::vector<Observable> observables,
                      const std::vector<std::array<std::string, 3>>& contexts) {
    Diagram d;
    std::sort(observables.begin(), observables.end(),
              [](const Observable& a, const Observable& b) { return a.id < b.id; });
    for (size_t i = 0; i + 1 < observables.size(); ++i) {
        if (observables[i].id == observables[i + 1].id) {
            throw DuplicateIdError("duplicate observable id '" + observables[i].id + "'");
        }
    }
    d.obs_ = std::move(observables);
    for (size_t i = 0; i < d.obs_.size(); ++i) {
        d.index_[d.obs_[i].id] = static_cast<int>(i);
    }

    std::set<std::array<int, 3>> seen;
    for (const auto& c : contexts) {
        std::array<int, 3> t{};
        for (int i = 0; i < 3; ++i) {
            auto it = d.index_.find(c[i]);
            if (it == d.index_.end()) {
                throw UnknownIdError("context references unknown id '" + c[i] + "'");
            }
            t[i] = it->second;
        }
        std::sort(t.begin(), t.end());
        if (t[0] == t[1] || t[1] == t[2]) {
            throw DuplicateIdError("context repeats observable '" + d.obs_[t[1]].id + "'");
        }
        seen.insert(t);
    }
    d.ctx_.assign(seen.begin(), seen.end());
    return d;
}

int Diagram::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw UnknownIdError("unknown observable id '" + id + "'");
    }
    return it->second;
}

std::array<std::string, 3> Diagram::context_ids(int c) const {
    const auto& t = ctx_.at(static_cast<size_t>(c));
    return {obs_[t[0]].id, obs_[t[1]].id, obs_[t[2]].id};
}

Diagram from_rays(const std::vector<std::pair<std::string, Ray>>& rays, double tol_orth) {
    std::vector<Observable> obs;
    obs.reserve(rays.size());
    for (const auto& [id, ray] : rays) {
        obs.push_back({id, ray});
    }
    std::vector<std::array<std::string, 3>> ctx;
    const int n = static_cast<int>(rays.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (inner(rays[i].second, rays[j].second) > tol_orth) continue;
            for (int k = j + 1; k < n; ++k) {
                if (inner(rays[i].second, rays[k].second) > tol_orth) continue;
                if (inner(rays[j].second, rays[k].second) > tol_orth) continue;
                ctx.push_back({rays[i].first, rays[j].first, rays[k].first});
            }
        }
    }
    return Diagram::make(std::move(obs), ctx);
}

ValidationReport validate(const Diagram& d, double tol_orth, double tol_unit) {
    ValidationReport r;
    r.pass = true;
    r.all_realized = true;
    for (size_t i = 0; i < d.observables().size(); ++i) {
        const auto& o = d.observables()[i];
        ObservableCheck oc;
        oc.observable = static_cast<int>(i);
        oc.realized = o.realization.has_value();
        if (oc.realized) {
            r.any_realized = true;
            oc.unit_deviation = std::fabs(norm(o.realization->vec()) - 1.0);
            r.max_unit_deviation = std::max(r.max_unit_deviation, oc.unit_deviation);
            if (oc.unit_deviation > tol_unit) r.pass = false;
        } else {
            r.all_realized = false;
        }
        r.observables.push_back(oc);
    }
    for (size_t c = 0; c < d.contexts().size(); ++c) {
        const auto& t = d.contexts()[c];
        ContextCheck cc;
        cc.context = static_cast<int>(c);
        cc.realized = true;
        for (int i = 0; i < 3; ++i) {
            if (!d.observables()[t[i]].realization) cc.realized = false;
        }
        for (int i = 0; i < 3; ++i) {
            for (int j = i + 1; j < 3; ++j) {
                const auto& oi = d.observables()[t[i]].realization;
                const auto& oj = d.observables()[t[j]].realization;
                if (oi && oj) {
                    cc.max_abs_inner = std::max(cc.max_abs_inner, inner(*oi, *oj));
                }
            }
        }
        r.max_context_deviation = std::max(r.max_context_deviation, cc.max_abs_inner);
        if (cc.max_abs_inner > tol_orth) r.pass = false;
        r.contexts.push_back(cc);
    }
    return r;
}

namespace {

const char* kEdgeColors[] = {"black",     "blue",   "red",       "forestgreen",
                             "darkorange", "purple", "deeppink",  "teal",
                             "brown",      "navy",   "darkcyan",  "firebrick"};

std::string dot_body(const Diagram& d, const std::vector<int>* values) {
    std::ostringstream out;
    out << "graph diagram {\n";
    out << "  node [shape=circle];\n";
    for (size_t i = 0; i < d.observables().size(); ++i) {
        const auto& o = d.observables()[i];
        out << "  " << json_string(o.id);
        if (values) {
            const int v = (*values)[i];
            if (v == 1) {
                out << " [shape=square]";
            } else if (v == 0) {
                out << " [shape=circle]";
            } else {
                out << " [shape=circle, style=dashed]";
            }
        }
        out << ";\n";
    }
    for (size_t c = 0; c < d.contexts().size(); ++c) {
        const auto ids = d.context_ids(static_cast<int>(c));
        const char* color = kEdgeColors[c % (sizeof(kEdgeColors) / sizeof(kEdgeColors[0]))];
        out << "  " << json_string(ids[0]) << " -- " << json_string(ids[1]) << " -- "
            << json_string(ids[2]) << " [color=" << color << ", label=\"c" << c << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

} // namespace

std::string export_dot(const Diagram& d) { return dot_body(d, nullptr); }

std::string export_dot(const Diagram& d, const std::vector<int>& values) {
    if (values.size() != d.observables().size()) {
        throw PreconditionError("export_dot: values size does not match observable count");
    }
    return dot_body(d, &values);
}

Diagram parse_diagram_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("diagram JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("observables") || !j.contains("contexts")) {
        throw ParseError("diagram JSON: expected object with 'observables' and 'contexts'");
    }
    std::vector<Observable> obs;
    for (const auto& o : j.at("observables")) {
        if (!o.is_object() || !o.contains("id") || !o.at("id").is_string()) {
            throw ParseError("diagram JSON: observable entries need a string 'id'");
        }
        Observable ob;
        ob.id = o.at("id").get<std::string>();
        if (o.contains("vector") && !o.at("vector").is_null()) {
            const auto& v = o.at("vector");
            if (!v.is_array() || v.size() != 3) {
                throw ParseError("diagram JSON: 'vector' must be null or an array of 3 numbers");
            }
            Vector3 vec{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
            if (!is_finite(vec)) {
                throw ParseError("diagram JSON: non-finite vector for '" + ob.id + "'");
            }
            ob.realization = Ray::from(vec);
        }
        obs.push_back(std::move(ob));
    }
    std::vector<std::array<std::string, 3>> ctx;
    for (const auto& c : j.at("contexts")) {
        if (!c.is_array() || c.size() != 3) {
            throw ParseError("diagram JSON: contexts must be arrays of 3 ids");
        }
        ctx.push_back({c[0].get<std::string>(), c[1].get<std::string>(), c[2].get<std::string>()});
    }
    return Diagram::make(std::move(obs), ctx);
}

Diagram load_diagram(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_diagram_json(buf.str());
}

std::string emit_diagram_json(const Diagram& d) {
    std::ostringstream out;
    out << "{\n \"observables\": [\n";
    for (size_t i = 0; i < d.observables().size(); ++i) {
        const auto& o = d.observables()[i];
        out << "  {\"id\": " << json_string(o.id) << ", \"vector\": ";
        if (o.realization) {
            out << json_vector(o.realization->vec());
        } else {
            out << "null";
        }
        out << "}" << (i + 1 < d.observables().size() ? "," : "") << "\n";
    }
    out << " ],\n \"contexts\": [\n";
    for (size_t c = 0; c < d.contexts().size(); ++c) {
        const auto ids = d.context_ids(static_cast<int>(c));
        out << "  [" << json_string(ids[0]) << ", " << json_string(ids[1]) << ", "
            << json_string(ids[2]) << "]" << (c + 1 < d.contexts().size() ? "," : "") << "\n";
    }
    out << " ]\n}\n";
    return out.str();
}

} // namespace ks
