#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <flatcirc/correlators.hpp>
#include <flatcirc/model_io.hpp>
#include <flatcirc/permutofan.hpp>

using namespace flatcirc;

namespace
{

struct common_options {
    std::optional<int> order;
    std::optional<int> mu_order;
    std::optional<std::string> lambda0;
    std::string format = "text";
    std::string report_path;
};

load_options to_load_options(const common_options &o)
{
    load_options l;
    l.order = o.order;
    l.mu_order = o.mu_order;
    if (o.lambda0) {
        l.lambda0 = parse_rational(*o.lambda0);
    }
    return l;
}

void write_text(const std::string &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw model_error("cannot write " + path);
    }
    out << text;
}

std::string render(const report &r, const std::string &format)
{
    return format == "json" ? report_to_json(r).dump(2) + "\n" : report_to_text(r);
}

int emit_report(const report &r, const common_options &o)
{
    const auto text = render(r, o.format);
    if (o.report_path.empty()) {
        std::cout << text;
    } else {
        write_text(o.report_path, text);
        std::cout << "report written to " << o.report_path << ": " << r.count(check_status::pass) << " passed, "
                  << r.count(check_status::fail) << " failed, " << r.count(check_status::skipped) << " skipped\n";
        for (const auto &c : r.records) {
            if (c.status == check_status::fail) {
                std::cout << "FAIL " << c.id << (c.offense ? " first offense " + *c.offense : std::string())
                          << (c.detail.empty() ? std::string() : " | " + c.detail) << "\n";
            }
        }
    }
    return r.ok() ? 0 : 1;
}

void add_common(CLI::App *app, common_options &o, bool with_report)
{
    app->add_option("--order", o.order, "x-degree truncation cap")->check(CLI::Range(2, 64));
    app->add_option("--mu-order", o.mu_order, "mu truncation cap")->check(CLI::Range(1, 32));
    app->add_option("--lambda0", o.lambda0, "pencil shift of the base connection, e.g. 1/2");
    app->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "text"}));
    if (with_report) {
        app->add_option("--report", o.report_path, "write the report to this file");
    }
}

// "epsilon" picks the model's declared field; otherwise components separated by ','.
vector_field epsilon_argument(const model_document &m, const std::string &arg)
{
    if (arg == "epsilon") {
        if (!m.epsilon) {
            throw model_error("model declares no epsilon field");
        }
        return *m.epsilon;
    }
    std::vector<series> comps;
    std::stringstream in(arg);
    std::string part;
    while (std::getline(in, part, ',')) {
        comps.push_back(parse_expression(part, m.coordinates, m.order));
    }
    if (comps.size() != m.dim) {
        throw model_error("epsilon needs " + std::to_string(m.dim) + " components separated by ','");
    }
    return vector_field(std::move(comps));
}

int run_fan(int n, bool verify, bool list, const std::string &format)
{
    const auto parts = enumerate_partitions(n);
    std::vector<std::size_t> by_dim(static_cast<std::size_t>(n), 0);
    for (const auto &t : parts) {
        ++by_dim[t.size() - 1];
    }
    ordered_json j;
    j["n"] = n;
    j["partitions"] = parts.size();
    j["conesByDimension"] = by_dim;
    bool ok = true;
    if (verify) {
        const auto r = verify_fan(n);
        ok = r.unimodular && r.complete && r.face_closed && r.membership_consistent &&
             r.ray_count == (std::size_t{1} << n) - 2;
        j["verify"] = {{"cones", r.cone_count},
                       {"rays", r.ray_count},
                       {"maximalCones", r.max_cone_count},
                       {"unimodular", r.unimodular},
                       {"complete", r.complete},
                       {"faceClosed", r.face_closed},
                       {"membershipConsistent", r.membership_consistent},
                       {"samplePoints", r.sample_points}};
    }
    if (list) {
        std::vector<std::string> names;
        for (const auto &t : parts) {
            names.push_back(to_string(t));
        }
        j["list"] = names;
    }
    if (format == "json") {
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "n " << n << "\npartitions " << parts.size() << "\ncones by dimension";
        for (auto c : by_dim) {
            std::cout << " " << c;
        }
        std::cout << "\n";
        if (verify) {
            const auto &v = j["verify"];
            std::cout << "cones " << v["cones"] << "\nrays " << v["rays"] << "\nmaximal cones " << v["maximalCones"]
                      << "\nunimodular " << v["unimodular"] << "\ncomplete " << v["complete"] << "\nface closed "
                      << v["faceClosed"] << "\nmembership consistent " << v["membershipConsistent"] << "\n";
        }
        if (list) {
            for (const auto &t : parts) {
                std::cout << to_string(t) << "\n";
            }
        }
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Exact checks for flat F-manifolds, their extensions, dualities and correlators"};
    app.require_subcommand(1);

    common_options check_opts;
    std::string check_model;
    std::vector<std::string> only;
    auto *check = app.add_subcommand("check", "run the residual suite on a model");
    check->add_option("model", check_model, "model file")->required()->check(CLI::ExistingFile);
    check->add_option("--only", only, "restrict to these checks or groups");
    add_common(check, check_opts, true);

    common_options dual_opts;
    std::string dual_model, eps_arg, dual_out;
    auto *dual = app.add_subcommand("dualize", "twist a model by an invertible field");
    dual->add_option("model", dual_model, "model file")->required()->check(CLI::ExistingFile);
    dual->add_option("--epsilon", eps_arg, "'epsilon' or components separated by ','")->required();
    dual->add_option("--out", dual_out, "write the dual model here")->required();
    add_common(dual, dual_opts, true);

    common_options ext_opts;
    std::string ext_model, ext_out;
    auto *ext = app.add_subcommand("extend", "build the extended connection from the Euler field");
    ext->add_option("model", ext_model, "model file")->required()->check(CLI::ExistingFile);
    ext->add_option("--out", ext_out, "write the mu-coefficients of H here");
    add_common(ext, ext_opts, true);

    int fan_n = 4;
    bool fan_verify = false, fan_list = false;
    std::string fan_format = "text";
    auto *fan = app.add_subcommand("fan", "ordered partitions and the braid fan");
    fan->add_option("--n", fan_n, "ground set size")->check(CLI::Range(1, 16));
    fan->add_flag("--verify", fan_verify, "verify rays, cones, unimodularity, completeness and faces");
    fan->add_flag("--list", fan_list, "list the partitions");
    fan->add_option("--format", fan_format, "output format")->check(CLI::IsMember({"json", "text"}));

    common_options cor_opts;
    std::string cor_input, cor_out;
    bool cor_force = false;
    auto *cor = app.add_subcommand("correlators", "top correlators of a model, or the master equation of a family");
    cor->add_option("input", cor_input, "model file or correlator family file")->required()->check(CLI::ExistingFile);
    cor->add_option("--out", cor_out, "write the correlator family here");
    cor->add_flag("--force", cor_force, "extract even if the master equation fails");
    add_common(cor, cor_opts, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*check) {
            const auto m = load_model_file(check_model, to_load_options(check_opts));
            return emit_report(run_check_suite(m, only), check_opts);
        }
        if (*dual) {
            const auto m = load_model_file(dual_model, to_load_options(dual_opts));
            const auto d = dualize(m, epsilon_argument(m, eps_arg));
            write_text(dual_out, model_to_json(d).dump(2) + "\n");
            std::cout << "dual model written to " << dual_out << "\n";
            // Re-check the dual model as read back from disk.
            return emit_report(run_check_suite(load_model_file(dual_out, {std::nullopt, dual_opts.mu_order, {}})),
                               dual_opts);
        }
        if (*ext) {
            const auto m = load_model_file(ext_model, to_load_options(ext_opts));
            if (!ext_out.empty()) {
                if (!m.euler || !m.structure.identity) {
                    throw model_error("extend needs an Euler field and an identity");
                }
                const auto h = h_from_e(lift(m.euler->field, m.mu_order), m.structure, m.nabla());
                ordered_json j;
                j["schemaVersion"] = model_schema_version;
                j["model"] = m.name;
                j["muOrder"] = m.mu_order;
                j["convention"] = "h[k][a][c] is the d_a component of H(d_c) at mu^k";
                ordered_json powers = ordered_json::array();
                for (int k = 0; k <= h.mu_cap(); ++k) {
                    ordered_json rows = ordered_json::array();
                    for (std::size_t a = 0; a < m.dim; ++a) {
                        ordered_json row = ordered_json::array();
                        for (std::size_t c = 0; c < m.dim; ++c) {
                            row.push_back(to_expression(h[k](a, c), m.coordinates));
                        }
                        rows.push_back(std::move(row));
                    }
                    powers.push_back(std::move(rows));
                }
                j["h"] = std::move(powers);
                write_text(ext_out, j.dump(2) + "\n");
            }
            return emit_report(run_check_suite(m, {"euler", "extended"}), ext_opts);
        }
        if (*fan) {
            return run_fan(fan_n, fan_verify, fan_list, fan_format);
        }
        if (*cor) {
            const auto j = read_json_file(cor_input);
            end_field b;
            std::string name;
            if (j.contains("entries")) {
                b = b_from_correlators(family_from_json(j));
                name = cor_input;
            } else {
                const auto m = load_model_file(cor_input, to_load_options(cor_opts));
                b = b_from_structure(m.structure);
                name = m.name;
            }
            const auto st = analyze(master_equation_residual(b));
            const auto fam = correlators_from_b(b, cor_force);
            if (!cor_out.empty()) {
                write_text(cor_out, family_to_json(fam).dump(2) + "\n");
            }
            ordered_json out;
            out["input"] = name;
            out["cap"] = fam.cap;
            out["entries"] = fam.entries.size();
            out["masterEquation"] = st.vanishes ? "pass" : "fail";
            out["provenDegree"] = st.proven_degree;
            out["firstOffense"] = st.first ? ordered_json(st.first->describe()) : ordered_json(nullptr);
            out["forced"] = fam.forced;
            if (cor_opts.format == "json") {
                std::cout << out.dump(2) << "\n";
            } else {
                std::cout << "input " << name << "\ncap " << fam.cap << "\nentries " << fam.entries.size()
                          << "\nmaster equation " << (st.vanishes ? "pass" : "fail") << " degree "
                          << st.proven_degree << (st.first ? " first offense " + st.first->describe() : "") << "\n";
            }
            return st.vanishes ? 0 : 1;
        }
    } catch (const error &err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
    return 0;
}
