#ifndef FLATCIRC_MODEL_IO_HPP
#define FLATCIRC_MODEL_IO_HPP

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <functional>
#include <future>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <flatcirc/correlators.hpp>
#include <flatcirc/duality.hpp>
#include <flatcirc/error.hpp>
#include <flatcirc/euler.hpp>
#include <flatcirc/expression.hpp>
#include <flatcirc/fmanifold.hpp>
#include <flatcirc/geometry.hpp>
#include <flatcirc/series.hpp>

namespace flatcirc
{

using ordered_json = nlohmann::ordered_json;

inline constexpr int model_schema_version = 1;
inline constexpr int report_schema_version = 1;
inline constexpr int family_schema_version = 1;

// ---------------------------------------------------------------------------
// Series in JSON: an expression string, an integer, or {"terms": ["i,j:c", ...]}

inline series series_from_json(const ordered_json &j, const std::vector<std::string> &names, int cap,
                               const std::string &where)
{
    try {
        if (j.is_string()) {
            return parse_expression(j.get<std::string>(), names, cap);
        }
        if (j.is_number_integer()) {
            return series::constant(names.size(), cap, rational(j.get<long>()));
        }
        if (j.is_object() && j.contains("terms") && j.at("terms").is_array()) {
            series s(names.size(), cap);
            for (const auto &line : j.at("terms")) {
                if (!line.is_string()) {
                    throw model_error("coefficient table entries must be strings");
                }
                const auto text = line.get<std::string>();
                // Terms above the cap are dropped so tables can be read at a lower order.
                const auto colon = text.find(':');
                if (colon != std::string::npos) {
                    int degree = 0;
                    std::stringstream head(text.substr(0, colon));
                    std::string part;
                    while (std::getline(head, part, ',')) {
                        degree += part.empty() ? 0 : std::atoi(part.c_str());
                    }
                    if (degree > cap) {
                        continue;
                    }
                }
                add_text_line(s, text);
            }
            return s;
        }
    } catch (const model_error &err) {
        throw model_error(where + ": " + err.what());
    } catch (const error &err) {
        throw model_error(where + ": " + err.what());
    }
    throw model_error(where + ": expected an expression string or a coefficient table");
}

inline ordered_json series_to_json(const series &s)
{
    ordered_json j;
    j["terms"] = to_lines(s);
    return j;
}

inline vector_field field_from_json(const ordered_json &j, const std::vector<std::string> &names, int cap,
                                    const std::string &where)
{
    if (!j.is_array() || j.size() != names.size()) {
        throw model_error(where + ": expected an array of " + std::to_string(names.size()) + " components");
    }
    std::vector<series> c;
    for (std::size_t i = 0; i < j.size(); ++i) {
        c.push_back(series_from_json(j[i], names, cap, where + "[" + std::to_string(i) + "]"));
    }
    return vector_field(std::move(c));
}

inline ordered_json field_to_json(const vector_field &v)
{
    ordered_json j = ordered_json::array();
    for (std::size_t i = 0; i < v.dim(); ++i) {
        j.push_back(series_to_json(v[i]));
    }
    return j;
}

// ---------------------------------------------------------------------------
// Model documents

struct model_document {
    std::string name;
    std::string description;
    std::size_t dim = 0;
    int order = 0;
    int mu_order = 0;
    std::vector<std::string> coordinates;
    std::optional<vector_potential> potential;
    f_structure structure;
    bool identity_declared = false;
    std::optional<euler_field> euler;
    std::optional<vector_field> epsilon;
    std::optional<rational> lambda0;
    // Christoffel symbols of the base connection; the coordinate frame is flat when absent.
    std::optional<connection> declared_base;

    connection base() const { return declared_base ? *declared_base : connection::flat(dim, order); }

    bool frame_is_flat() const { return !declared_base || analyze(declared_base->as_tensor()).vanishes; }

    connection nabla() const { return lambda0 ? shift_base(structure, base(), *lambda0) : base(); }
};

struct load_options {
    std::optional<int> order;
    std::optional<int> mu_order;
    std::optional<rational> lambda0;
};

inline rational rational_from_json(const ordered_json &j, const std::string &where)
{
    try {
        if (j.is_number_integer()) {
            return rational(j.get<long>());
        }
        if (j.is_string()) {
            return parse_rational(j.get<std::string>());
        }
    } catch (const error &err) {
        throw model_error(where + ": " + err.what());
    }
    throw model_error(where + ": expected an integer or a rational string");
}

// table[a][b] lists the components c of the entry (a, b, c).
template <class Rank3>
void read_rank3(const ordered_json &table, const std::vector<std::string> &names, int cap, const std::string &what,
                Rank3 &out)
{
    const std::size_t n = names.size();
    if (!table.is_array() || table.size() != n) {
        throw model_error(what + " must be an n x n array of component arrays");
    }
    for (std::size_t a = 0; a < n; ++a) {
        if (!table[a].is_array() || table[a].size() != n) {
            throw model_error(what + "[" + std::to_string(a) + "] must have " + std::to_string(n) + " entries");
        }
        for (std::size_t b = 0; b < n; ++b) {
            const auto where = what + "[" + std::to_string(a) + "][" + std::to_string(b) + "]";
            const auto v = field_from_json(table[a][b], names, cap, where);
            for (std::size_t c = 0; c < n; ++c) {
                out(a, b, c) = v[c];
            }
        }
    }
}

template <class Rank3>
ordered_json write_rank3(const Rank3 &t, std::size_t n, int order)
{
    ordered_json s = ordered_json::array();
    for (std::size_t a = 0; a < n; ++a) {
        ordered_json row = ordered_json::array();
        for (std::size_t b = 0; b < n; ++b) {
            ordered_json comp = ordered_json::array();
            for (std::size_t c = 0; c < n; ++c) {
                comp.push_back(series_to_json(t(a, b, c).truncated(order)));
            }
            row.push_back(std::move(comp));
        }
        s.push_back(std::move(row));
    }
    return s;
}

inline model_document load_model(const ordered_json &j, const load_options &opts = {})
{
    if (!j.is_object()) {
        throw model_error("model must be a JSON object");
    }
    if (!j.contains("schemaVersion") || j.at("schemaVersion") != model_schema_version) {
        throw model_error("unsupported or missing schemaVersion (expected " + std::to_string(model_schema_version) +
                          ")");
    }
    model_document m;
    try {
        m.name = j.value("name", std::string("unnamed"));
        m.description = j.value("description", std::string());
        m.dim = j.at("dimension").get<std::size_t>();
        m.order = opts.order.value_or(j.value("order", 6));
        m.mu_order = opts.mu_order.value_or(j.value("muOrder", 2));
    } catch (const nlohmann::json::exception &err) {
        throw model_error(std::string("malformed header: ") + err.what());
    }
    if (m.dim < 1 || m.dim > max_vars) {
        throw model_error("dimension must lie in 1.." + std::to_string(max_vars));
    }
    if (m.order < 2 || m.order > 64) {
        throw model_error("order must lie in 2..64");
    }
    if (m.mu_order < 1 || m.mu_order > 32) {
        throw model_error("muOrder must lie in 1..32");
    }
    if (j.contains("coordinates")) {
        m.coordinates = j.at("coordinates").get<std::vector<std::string>>();
        std::set<std::string> distinct(m.coordinates.begin(), m.coordinates.end());
        if (m.coordinates.size() != m.dim || distinct.size() != m.dim || distinct.count("exp")) {
            throw model_error("coordinates must be " + std::to_string(m.dim) + " distinct names other than exp");
        }
    } else {
        m.coordinates = default_coordinates(m.dim);
    }
    const auto &names = m.coordinates;
    const bool has_pot = j.contains("potential"), has_struct = j.contains("structure");
    if (has_pot == has_struct) {
        throw model_error("exactly one of potential and structure must be given");
    }
    if (has_pot) {
        m.potential = vector_potential(field_from_json(j.at("potential"), names, m.order, "potential"));
        m.structure = potential_to_structure(*m.potential);
    } else {
        higgs_field h(m.dim, m.order);
        read_rank3(j.at("structure"), names, m.order, "structure", h);
        m.structure = f_structure{h, std::nullopt};
    }
    if (j.contains("connection")) {
        connection g(m.dim, m.order);
        read_rank3(j.at("connection"), names, m.order, "connection", g);
        m.declared_base = g;
    }
    if (j.contains("identity")) {
        m.structure.identity = field_from_json(j.at("identity"), names, m.order, "identity");
        m.identity_declared = true;
    } else if (auto found = find_identity(m.structure); found.identity) {
        m.structure.identity = *found.identity;
    }
    if (j.contains("euler")) {
        const auto &e = j.at("euler");
        if (!e.is_object() || !e.contains("field")) {
            throw model_error("euler must be an object with field and weight");
        }
        m.euler = euler_field{field_from_json(e.at("field"), names, m.order, "euler.field"),
                              e.contains("weight") ? rational_from_json(e.at("weight"), "euler.weight") : rational(1)};
    }
    if (j.contains("epsilon")) {
        m.epsilon = field_from_json(j.at("epsilon"), names, m.order, "epsilon");
    }
    if (opts.lambda0) {
        m.lambda0 = opts.lambda0;
    } else if (j.contains("lambda0")) {
        m.lambda0 = rational_from_json(j.at("lambda0"), "lambda0");
    }
    return m;
}

inline ordered_json read_json_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in) {
        throw model_error("cannot open " + path);
    }
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error &err) {
        throw model_error(path + ": " + err.what());
    }
}

inline model_document load_model_file(const std::string &path, const load_options &opts = {})
{
    return load_model(read_json_file(path), opts);
}

// Canonical form: coefficient tables, truncated to the proven degree of the structure.
inline ordered_json model_to_json(const model_document &m)
{
    int order = std::max(2, m.structure.valid_to());
    if (m.declared_base) {
        order = std::max(2, std::min(order, m.declared_base->valid_to()));
    }
    auto cut = [order](const series &s) { return s.truncated(order); };
    ordered_json j;
    j["schemaVersion"] = model_schema_version;
    j["name"] = m.name;
    if (!m.description.empty()) {
        j["description"] = m.description;
    }
    j["dimension"] = m.dim;
    j["order"] = order;
    j["muOrder"] = m.mu_order;
    j["coordinates"] = m.coordinates;
    j["structure"] = write_rank3(m.structure.structure, m.dim, order);
    if (m.declared_base) {
        j["connection"] = write_rank3(*m.declared_base, m.dim, order);
    }
    auto field = [&](const vector_field &v) {
        std::vector<series> c;
        for (std::size_t i = 0; i < v.dim(); ++i) {
            c.push_back(cut(v[i]));
        }
        return field_to_json(vector_field(std::move(c)));
    };
    if (m.structure.identity) {
        j["identity"] = field(*m.structure.identity);
    }
    if (m.euler) {
        j["euler"] = {{"field", field(m.euler->field)}, {"weight", to_fraction_string(m.euler->weight)}};
    }
    if (m.epsilon) {
        j["epsilon"] = field(*m.epsilon);
    }
    if (m.lambda0) {
        j["lambda0"] = to_fraction_string(*m.lambda0);
    }
    return j;
}

// Dual model: product eps^{-1} o X o Y with identity eps over the conjugated connection.
inline model_document dualize(const model_document &m, const vector_field &eps)
{
    const auto pair = dual_structure(m.structure, eps);
    model_document d;
    d.name = m.name + "-dual";
    d.description = "twist of " + m.name;
    d.dim = m.dim;
    d.order = m.order;
    d.mu_order = m.mu_order;
    d.coordinates = m.coordinates;
    d.structure = pair.dual;
    d.identity_declared = true;
    d.declared_base = dual_connection(m.structure, m.base(), eps, pair.inverse_used);
    return d;
}

// ---------------------------------------------------------------------------
// Reports

enum class check_status { pass, fail, skipped };

inline std::string to_string(check_status s)
{
    switch (s) {
    case check_status::pass:
        return "pass";
    case check_status::fail:
        return "fail";
    case check_status::skipped:
        return "skipped";
    }
    return "fail";
}

struct check_record {
    std::string id;
    std::string anchor;
    check_status status = check_status::skipped;
    std::optional<int> proven_degree;
    std::optional<int> mu_degree;
    std::optional<std::string> offense;
    std::string detail;
};

struct report {
    std::string model;
    int order = 0;
    int mu_order = 0;
    std::vector<check_record> records;

    std::size_t count(check_status s) const
    {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [s](const check_record &r) { return r.status == s; }));
    }

    bool ok() const { return count(check_status::fail) == 0; }

    const check_record *find(const std::string &id) const
    {
        for (const auto &r : records) {
            if (r.id == id) {
                return &r;
            }
        }
        return nullptr;
    }
};

inline ordered_json report_to_json(const report &r)
{
    ordered_json j;
    j["schemaVersion"] = report_schema_version;
    j["model"] = r.model;
    j["order"] = r.order;
    j["muOrder"] = r.mu_order;
    ordered_json checks = ordered_json::array();
    for (const auto &c : r.records) {
        ordered_json x;
        x["id"] = c.id;
        x["anchor"] = c.anchor;
        x["status"] = to_string(c.status);
        x["provenDegree"] = c.proven_degree ? ordered_json(*c.proven_degree) : ordered_json(nullptr);
        x["muDegree"] = c.mu_degree ? ordered_json(*c.mu_degree) : ordered_json(nullptr);
        x["firstOffense"] = c.offense ? ordered_json(*c.offense) : ordered_json(nullptr);
        x["detail"] = c.detail;
        checks.push_back(std::move(x));
    }
    j["checks"] = std::move(checks);
    j["summary"] = {{"passed", r.count(check_status::pass)},
                    {"failed", r.count(check_status::fail)},
                    {"skipped", r.count(check_status::skipped)}};
    return j;
}

inline std::string report_to_text(const report &r)
{
    std::ostringstream out;
    out << "model " << r.model << " order " << r.order << " mu-order " << r.mu_order << "\n";
    for (const auto &c : r.records) {
        std::string status = to_string(c.status);
        std::transform(status.begin(), status.end(), status.begin(), ::toupper);
        out << status << " " << c.id << " (" << c.anchor << ")";
        if (c.proven_degree) {
            out << " degree " << *c.proven_degree;
        }
        if (c.mu_degree) {
            out << " mu " << *c.mu_degree;
        }
        if (c.offense) {
            out << " first offense " << *c.offense;
        }
        if (!c.detail.empty()) {
            out << " | " << c.detail;
        }
        out << "\n";
    }
    out << "summary: " << r.count(check_status::pass) << " passed, " << r.count(check_status::fail) << " failed, "
        << r.count(check_status::skipped) << " skipped\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Check suite

namespace detail
{

inline check_record from_status(const residual_status &st)
{
    check_record r;
    r.status = st.vanishes ? check_status::pass : check_status::fail;
    r.proven_degree = st.proven_degree;
    if (st.first) {
        r.offense = st.first->describe();
    }
    return r;
}

inline check_record from_status(const mu_residual_status &st)
{
    check_record r;
    r.status = st.vanishes ? check_status::pass : check_status::fail;
    r.proven_degree = st.proven_degree;
    r.mu_degree = st.mu_checked;
    if (st.first) {
        r.offense = "mu^" + std::to_string(st.first_mu_power) + " " + st.first->describe();
    }
    return r;
}

inline check_record skipped(std::string why)
{
    check_record r;
    r.status = check_status::skipped;
    r.detail = std::move(why);
    return r;
}

// Combines several residuals: fails on the first failing one, proves the minimum degree.
inline check_record combine(const std::vector<std::pair<std::string, residual_status>> &parts)
{
    check_record r;
    r.status = check_status::pass;
    std::string names;
    for (const auto &[name, st] : parts) {
        r.proven_degree = r.proven_degree ? std::min(*r.proven_degree, st.proven_degree) : st.proven_degree;
        names += (names.empty() ? "" : ", ") + name;
        if (!st.vanishes && r.status == check_status::pass) {
            r.status = check_status::fail;
            r.offense = name + " " + (st.first ? st.first->describe() : std::string());
        }
    }
    r.detail = names;
    return r;
}

inline bool is_constant(const vector_field &v)
{
    for (std::size_t i = 0; i < v.dim(); ++i) {
        for (const auto &[m, c] : v[i].terms()) {
            if (m.degree() > 0) {
                return false;
            }
        }
    }
    return true;
}

inline std::string render(const vector_field &v, const std::vector<std::string> &names)
{
    std::string out = "(";
    for (std::size_t i = 0; i < v.dim(); ++i) {
        out += (i ? ", " : "") + to_expression(v[i], names);
    }
    return out + ")";
}

} // namespace detail

struct check_definition {
    std::string id;
    std::string anchor;
    std::string group;
    std::function<check_record(const model_document &)> run;
};

inline const std::vector<check_definition> &check_catalog()
{
    using detail::combine;
    using detail::from_status;
    using detail::skipped;
    static const std::vector<check_definition> catalog = {
        {"torsion", "pencil torsion", "pencil",
         [](const model_document &m) { return from_status(analyze(torsion(shift_base(m.structure, m.base(), 1)))); }},
        {"r1", "pencil curvature linear term", "pencil",
         [](const model_document &m) { return from_status(analyze(pencil_curvature_split(m.structure.structure, m.base()).r1)); }},
        {"r2", "pencil curvature quadratic term", "pencil",
         [](const model_document &m) { return from_status(analyze(pencil_curvature_split(m.structure.structure, m.base()).r2)); }},
        {"associativity", "associativity of the product", "fmanifold",
         [](const model_document &m) { return from_status(analyze(associativity_residual(m.structure))); }},
        {"hertling-manin", "Hertling-Manin identity", "fmanifold",
         [](const model_document &m) { return from_status(analyze(hm_identity_residual(m.structure))); }},
        {"identity", "identity field", "fmanifold",
         [](const model_document &m) {
             if (!m.structure.identity) {
                 auto r = skipped("no identity declared or found");
                 r.status = check_status::fail;
                 return r;
             }
             auto r = from_status(analyze(identity_residual(m.structure, *m.structure.identity)));
             r.detail = (m.identity_declared ? "declared " : "solved ") +
                        detail::render(*m.structure.identity, m.coordinates);
             return r;
         }},
        {"potential-roundtrip", "vector potential roundtrip", "fmanifold",
         [](const model_document &m) {
             if (!m.frame_is_flat()) {
                 return skipped("needs flat coordinates");
             }
             const auto pot = structure_to_potential(m.structure);
             if (m.potential) {
                 return from_status(analyze(as_tensor(pot.field() - m.potential->field())));
             }
             const auto back = potential_to_structure(pot);
             return from_status(analyze(back.structure.as_tensor() - m.structure.structure.as_tensor()));
         }},
        {"d-symmetry", "total symmetry of D", "fmanifold",
         [](const model_document &m) {
             const std::size_t n = m.dim;
             const auto nabla = m.nabla();
             std::vector<vector_field> swap12, swap23;
             for (std::size_t a = 0; a < n; ++a) {
                 for (std::size_t b = 0; b < n; ++b) {
                     for (std::size_t c = 0; c < n; ++c) {
                         const auto x = m.structure.frame(a), y = m.structure.frame(b), z = m.structure.frame(c);
                         const auto d = d_tensor(m.structure, nabla, x, y, z);
                         swap12.push_back(d - d_tensor(m.structure, nabla, y, x, z));
                         swap23.push_back(d - d_tensor(m.structure, nabla, x, z, y));
                     }
                 }
             }
             return combine({{"D(X,Y,Z)-D(Y,X,Z)", analyze(stack({n, n, n}, swap12))},
                             {"D(X,Y,Z)-D(X,Z,Y)", analyze(stack({n, n, n}, swap23))}});
         }},
        {"l-membership", "sheaf L membership", "identity",
         [](const model_document &m) {
             if (!m.structure.identity) {
                 return skipped("no identity");
             }
             const auto nabla = m.nabla();
             const auto &e = *m.structure.identity;
             const auto e1 = covariant_derivative(nabla, e, e);
             const auto e2 = covariant_derivative(nabla, e, e1);
             std::vector<std::pair<std::string, vector_field>> fields{{"e", e}};
             for (std::size_t a = 0; a < m.dim; ++a) {
                 fields.emplace_back("d" + std::to_string(a), m.structure.frame(a));
             }
             fields.emplace_back("nabla_e e", e1);
             fields.emplace_back("nabla_e nabla_e e", e2);
             std::vector<std::pair<std::string, residual_status>> parts;
             for (const auto &[name, eps] : fields) {
                 const auto l = l_membership(m.structure, nabla, eps);
                 parts.emplace_back(name + " condition", l.condition_status);
                 parts.emplace_back(name + " ad", l.ad_status);
                 parts.emplace_back(name + " P", l.p_status);
             }
             auto r = combine(parts);
             r.detail = "fields e, flat frame, nabla_e e, nabla_e^2 e";
             return r;
         }},
        {"identity-derivation", "Lie derivative along e is a derivation", "identity",
         [](const model_document &m) {
             if (!m.structure.identity) {
                 return skipped("no identity");
             }
             return from_status(l_membership(m.structure, m.nabla(), *m.structure.identity).derivation_status);
         }},
        {"nabla-e-e", "classification of nabla_e e", "identity",
         [](const model_document &m) {
             if (!m.structure.identity) {
                 return skipped("no identity");
             }
             const auto r = nabla_e_e_mode(m.structure, m.nabla());
             check_record out;
             out.status = check_status::pass;
             out.detail = to_string(r.mode);
             if (r.mode == identity_mode::eigen) {
                 out.detail += " " + to_short_string(r.eigenvalue);
             }
             return out;
         }},
        {"euler-weight", "Euler field weight", "euler",
         [](const model_document &m) {
             if (!m.euler) {
                 return skipped("no Euler field");
             }
             auto r = from_status(analyze(euler_residual(m.structure, m.euler->field, m.euler->weight)));
             r.detail = "weight " + to_short_string(m.euler->weight);
             return r;
         }},
        {"euler-compat", "Euler field preserves flat fields", "euler",
         [](const model_document &m) {
             if (!m.frame_is_flat()) {
                 return skipped("needs flat coordinates");
             }
             if (!m.euler) {
                 return skipped("no Euler field");
             }
             check_record r;
             r.status = flat_compat(m.euler->field) ? check_status::pass : check_status::fail;
             r.proven_degree = m.euler->field.valid_to();
             return r;
         }},
        {"e-equation", "extended connection equation for E", "extended",
         [](const model_document &m) {
             if (!m.euler || !m.structure.identity) {
                 return skipped("needs Euler field and identity");
             }
             return from_status(analyze(e_equation_residual(lift(m.euler->field, m.mu_order), m.structure, m.nabla())));
         }},
        {"h-identity", "H(e) = E", "extended",
         [](const model_document &m) {
             if (!m.euler || !m.structure.identity) {
                 return skipped("needs Euler field and identity");
             }
             const auto e_mu = lift(m.euler->field, m.mu_order);
             const auto h = h_from_e(e_mu, m.structure, m.nabla());
             return from_status(analyze(mu_apply(h, lift(*m.structure.identity, m.mu_order)) - e_mu));
         }},
        {"extended-flatness", "flatness of the extended connection", "extended",
         [](const model_document &m) {
             if (!m.euler || !m.structure.identity) {
                 return skipped("needs Euler field and identity");
             }
             const auto nabla = m.nabla();
             const auto h = h_from_e(lift(m.euler->field, m.mu_order), m.structure, nabla);
             const auto r = full_flatness_residual(h, m.structure, nabla);
             for (const auto *st : {&r.flatness_status, &r.functional_status, &r.unit_status}) {
                 if (!st->vanishes) {
                     return from_status(*st);
                 }
             }
             auto out = from_status(r.flatness_status);
             out.proven_degree = std::min({r.flatness_status.proven_degree, r.functional_status.proven_degree,
                                           r.unit_status.proven_degree});
             out.detail = "flatness, functional and unit equations";
             return out;
         }},
        {"potential-flatness", "flatness in potential form", "extended",
         [](const model_document &m) {
             if (!m.frame_is_flat()) {
                 return skipped("needs flat coordinates");
             }
             if (!m.euler || !m.structure.identity || !m.potential) {
                 return skipped("needs Euler field, identity and potential");
             }
             if (m.lambda0 && *m.lambda0 != 0) {
                 return skipped("needs the unshifted flat frame");
             }
             const auto r = potential_flatness_residual(lift(m.euler->field, m.mu_order), *m.potential, m.structure,
                                                        m.nabla());
             return from_status(r.status);
         }},
        {"dual-associativity", "twisted product associativity", "duality",
         [](const model_document &m) {
             if (!m.epsilon || !m.structure.identity) {
                 return skipped("needs epsilon and identity");
             }
             return from_status(analyze(associativity_residual(dual_structure(m.structure, *m.epsilon).dual)));
         }},
        {"dual-hertling-manin", "twisted product Hertling-Manin identity", "duality",
         [](const model_document &m) {
             if (!m.epsilon || !m.structure.identity) {
                 return skipped("needs epsilon and identity");
             }
             return from_status(analyze(hm_identity_residual(dual_structure(m.structure, *m.epsilon).dual)));
         }},
        {"dual-identity", "epsilon is the twisted identity", "duality",
         [](const model_document &m) {
             if (!m.epsilon || !m.structure.identity) {
                 return skipped("needs epsilon and identity");
             }
             return from_status(analyze(identity_residual(dual_structure(m.structure, *m.epsilon).dual, *m.epsilon)));
         }},
        {"dual-return", "twisting back recovers the product", "duality",
         [](const model_document &m) {
             if (!m.epsilon || !m.structure.identity) {
                 return skipped("needs epsilon and identity");
             }
             const auto &f = m.structure;
             const auto dual = dual_structure(f, *m.epsilon).dual;
             const auto w = circ_inverse(dual, *f.identity);
             std::vector<vector_field> out;
             for (std::size_t a = 0; a < m.dim; ++a) {
                 for (std::size_t b = 0; b < m.dim; ++b) {
                     out.push_back(multiply(dual, w, multiply(dual, f.frame(a), f.frame(b))) -
                                   multiply(f, f.frame(a), f.frame(b)));
                 }
             }
             return from_status(analyze(stack({m.dim, m.dim}, out)));
         }},
        {"primitive-section", "primitive section u = e", "primitive",
         [](const model_document &m) {
             if (!m.frame_is_flat()) {
                 return skipped("needs flat coordinates");
             }
             if (!m.structure.identity || !detail::is_constant(*m.structure.identity)) {
                 return skipped("needs a constant identity");
             }
             const auto p = primitive_section(m.structure, m.base(), *m.structure.identity);
             auto r = from_status(p.closedness_status);
             if (!p.primitive) {
                 r.status = check_status::fail;
                 r.offense = "Jacobian of Bu is singular at the origin";
             }
             r.detail = "Bu = " + detail::render(p.image, m.coordinates);
             return r;
         }},
        {"master-equation", "master equation for B", "correlators",
         [](const model_document &m) {
             if (!m.frame_is_flat()) {
                 return skipped("needs flat coordinates");
             }
             return from_status(analyze(master_equation_residual(b_from_structure(m.structure))));
         }},
        {"correlator-roundtrip", "top correlators roundtrip", "correlators",
         [](const model_document &m) {
             if (!m.frame_is_flat()) {
                 return skipped("needs flat coordinates");
             }
             const auto b = b_from_structure(m.structure);
             const auto fam = correlators_from_b(b);
             const auto back = b_from_correlators(fam);
             std::vector<vector_field> cols;
             for (std::size_t c = 0; c < m.dim; ++c) {
                 cols.push_back((back - b).column(c));
             }
             const auto s = structure_from_b(back);
             return combine({{"B roundtrip", analyze(stack({m.dim}, cols))},
                             {"structure from B",
                              analyze(s.structure.as_tensor() - m.structure.structure.as_tensor())}});
         }},
    };
    return catalog;
}

// Selection entries name checks or groups; empty selects everything.
inline std::vector<const check_definition *> select_checks(const std::vector<std::string> &selection)
{
    std::vector<const check_definition *> out;
    for (const auto &def : check_catalog()) {
        if (selection.empty() ||
            std::any_of(selection.begin(), selection.end(),
                        [&](const std::string &s) { return s == def.id || s == def.group; })) {
            out.push_back(&def);
        }
    }
    for (const auto &s : selection) {
        if (std::none_of(check_catalog().begin(), check_catalog().end(),
                         [&](const check_definition &d) { return s == d.id || s == d.group; })) {
            throw precondition_error("unknown check or group '" + s + "'");
        }
    }
    return out;
}

// Runs checks concurrently; records keep catalog order.
inline report run_check_suite(const model_document &m, const std::vector<std::string> &selection = {})
{
    const auto defs = select_checks(selection);
    std::vector<std::future<check_record>> jobs;
    for (const auto *def : defs) {
        jobs.push_back(std::async(std::launch::async, [&m, def] {
            check_record r;
            try {
                r = def->run(m);
            } catch (const error &err) {
                r = check_record{};
                r.status = check_status::fail;
                r.detail = err.what();
            }
            r.id = def->id;
            r.anchor = def->anchor;
            return r;
        }));
    }
    report rep{m.name, m.order, m.mu_order, {}};
    for (auto &job : jobs) {
        rep.records.push_back(job.get());
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Correlator family files

inline ordered_json family_to_json(const correlator_family &fam)
{
    ordered_json j;
    j["schemaVersion"] = family_schema_version;
    j["dimension"] = fam.dim;
    j["cap"] = fam.cap;
    j["forced"] = fam.forced;
    ordered_json entries = ordered_json::object();
    for (const auto &key : correlator_keys(fam.dim, fam.cap)) {
        auto it = fam.entries.find(key);
        if (it == fam.entries.end()) {
            continue;
        }
        ordered_json rows = ordered_json::array();
        for (std::size_t i = 0; i < it->second.rows(); ++i) {
            ordered_json row = ordered_json::array();
            for (std::size_t k = 0; k < it->second.cols(); ++k) {
                row.push_back(to_fraction_string(it->second(i, k)));
            }
            rows.push_back(std::move(row));
        }
        entries[correlator_family::key_to_string(key)] = std::move(rows);
    }
    j["entries"] = std::move(entries);
    return j;
}

inline correlator_family family_from_json(const ordered_json &j)
{
    if (!j.is_object() || !j.contains("schemaVersion") || j.at("schemaVersion") != family_schema_version) {
        throw model_error("unsupported or missing schemaVersion in correlator family");
    }
    correlator_family fam;
    try {
        fam.dim = j.at("dimension").get<std::size_t>();
        fam.cap = j.at("cap").get<int>();
        fam.forced = j.value("forced", false);
        for (const auto &[key_text, rows] : j.at("entries").items()) {
            index_tuple key;
            std::stringstream in(key_text);
            std::string part;
            while (std::getline(in, part, ',')) {
                key.push_back(static_cast<std::size_t>(std::stoul(part)));
            }
            const std::size_t r = rows.size(), c = r ? rows[0].size() : 0;
            rational_matrix m(r, c);
            for (std::size_t i = 0; i < r; ++i) {
                if (rows[i].size() != c) {
                    throw model_error("ragged matrix for " + key_text);
                }
                for (std::size_t k = 0; k < c; ++k) {
                    m(i, k) = rational_from_json(rows[i][k], "entries." + key_text);
                }
            }
            fam.set(std::move(key), std::move(m));
        }
    } catch (const nlohmann::json::exception &err) {
        throw model_error(std::string("malformed correlator family: ") + err.what());
    } catch (const std::logic_error &err) {
        throw model_error(std::string("malformed correlator key: ") + err.what());
    }
    return fam;
}

} // namespace flatcirc

#endif
