#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../core/error.hpp"
#include "../models/energy_model.hpp"

namespace thermolim
{
inline constexpr char const* kRecordVersion = "v1";

//! One energy evaluation of an experiment.
struct ExperimentRecord
{
    std::string experiment;
    std::string model;
    ParamMap params;
    std::string domain;
    //! Name of the index parameter ("ell" or "n").
    std::string param_name{"ell"};
    double param{0};
    //! Sample index within one parameter value.
    std::size_t sample{0};
    double value{0};
    double std_error{0};
    double volume{0};
    double normalized{0};
    std::uint64_t seed{0};
    //! Radius of the translation-averaging ball.
    double ball_radius{4};
    std::optional<double> wall_time;

    friend bool operator==(ExperimentRecord const&, ExperimentRecord const&) = default;
};

inline nlohmann::json to_json(ExperimentRecord const& r)
{
    nlohmann::json j;
    j["v"] = kRecordVersion;
    j["experiment"] = r.experiment;
    j["model"] = r.model;
    j["params"] = nlohmann::json::object();
    for (auto const& [k, v] : r.params)
    {
        j["params"][k] = v;
    }
    j["domain"] = r.domain;
    j["param_name"] = r.param_name;
    j["param"] = r.param;
    j["sample"] = r.sample;
    j["value"] = r.value;
    j["stderr"] = r.std_error;
    j["volume"] = r.volume;
    j["normalized"] = r.normalized;
    j["seed"] = r.seed;
    j["ball_radius"] = r.ball_radius;
    if (r.wall_time)
    {
        j["wall_time"] = *r.wall_time;
    }
    return j;
}

inline ExperimentRecord record_from_json(nlohmann::json const& j)
{
    expect(j.is_object(), "record must be an object");
    expect(j.value("v", std::string{}) == kRecordVersion, "unsupported record version");
    ExperimentRecord r;
    r.experiment = j.at("experiment").get<std::string>();
    r.model = j.at("model").get<std::string>();
    for (auto const& [k, v] : j.at("params").items())
    {
        r.params[k] = v.get<double>();
    }
    r.domain = j.at("domain").get<std::string>();
    r.param_name = j.at("param_name").get<std::string>();
    r.param = j.at("param").get<double>();
    r.sample = j.at("sample").get<std::size_t>();
    r.value = j.at("value").get<double>();
    r.std_error = j.at("stderr").get<double>();
    r.volume = j.at("volume").get<double>();
    r.normalized = j.at("normalized").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.ball_radius = j.at("ball_radius").get<double>();
    if (j.contains("wall_time"))
    {
        r.wall_time = j.at("wall_time").get<double>();
    }
    return r;
}

//! Serialized record without a trailing newline.
inline std::string record_line(ExperimentRecord const& r) { return to_json(r).dump(); }

//! Append records to a line-delimited results file.
inline void persist(std::string const& path, std::vector<ExperimentRecord> const& records)
{
    std::ofstream out(path, std::ios::app | std::ios::binary);
    expect(out.good(), "cannot open results file '" + path + "'");
    for (auto const& r : records)
    {
        out << record_line(r) << '\n';
    }
    out.flush();
    expect(out.good(), "failed writing results file '" + path + "'");
}

inline std::vector<ExperimentRecord> parse_records(std::istream& in)
{
    std::vector<ExperimentRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty())
        {
            continue;
        }
        try
        {
            out.push_back(record_from_json(nlohmann::json::parse(line)));
        }
        catch (std::exception const& e)
        {
            throw Error("malformed record at line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<ExperimentRecord> read_records(std::string const& path)
{
    std::ifstream in(path, std::ios::binary);
    expect(in.good(), "cannot open results file '" + path + "'");
    return parse_records(in);
}

//! Concatenate results files into `out` (appending).
inline std::size_t merge_results(std::vector<std::string> const& inputs, std::string const& out)
{
    std::size_t n = 0;
    for (auto const& p : inputs)
    {
        auto recs = read_records(p);
        persist(out, recs);
        n += recs.size();
    }
    return n;
}

//---------------------------------------------------------------------------//
// Reports
//---------------------------------------------------------------------------//

inline std::string format_number(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline constexpr char const* kCsvHeader = "experiment,param,value,stderr,volume,normalized,seed";

namespace detail
{
inline std::string csv_field(std::string const& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
    {
        return s;
    }
    std::string q = "\"";
    for (char c : s)
    {
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return q + "\"";
}
}  // namespace detail

inline void write_csv(std::ostream& out, std::vector<ExperimentRecord> const& records)
{
    out << kCsvHeader << '\n';
    for (auto const& r : records)
    {
        out << detail::csv_field(r.experiment) << ',' << format_number(r.param) << ','
            << format_number(r.value) << ',' << format_number(r.std_error) << ','
            << format_number(r.volume) << ',' << format_number(r.normalized) << ',' << r.seed
            << '\n';
    }
}

//! Aggregate of one parameter value of one curve.
struct ReportRow
{
    double param{0};
    double mean{0};
    double spread{0};
    double residual{0};
    std::size_t count{0};
};

struct ReportTable
{
    std::string experiment;
    std::string model;
    std::string domain;
    std::string param_name;
    //! Mean at the largest parameter value.
    double terminal{0};
    std::vector<ReportRow> rows;
};

/*!
 * Curves grouped by (experiment, model, domain). Records of general-domain
 * experiments are grouped by (experiment, model) since each index carries
 * its own domain.
 */
inline std::vector<ReportTable> summarize(std::vector<ExperimentRecord> const& records)
{
    std::map<std::tuple<std::string, std::string, std::string>, std::map<double, std::vector<double>>> groups;
    std::map<std::tuple<std::string, std::string, std::string>, std::string> pname;
    for (auto const& r : records)
    {
        std::string dom = r.param_name == "n" ? std::string("sequence") : r.domain;
        auto key = std::tuple{r.experiment, r.model, dom};
        groups[key][r.param].push_back(r.normalized);
        pname[key] = r.param_name;
    }
    std::vector<ReportTable> out;
    for (auto const& [key, by_param] : groups)
    {
        ReportTable t;
        std::tie(t.experiment, t.model, t.domain) = key;
        t.param_name = pname[key];
        for (auto const& [p, vals] : by_param)
        {
            ReportRow row;
            row.param = p;
            row.count = vals.size();
            double lo = vals.front(), hi = vals.front(), sum = 0;
            for (double v : vals)
            {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
            }
            row.mean = sum / static_cast<double>(vals.size());
            row.spread = hi - lo;
            t.rows.push_back(row);
        }
        t.terminal = t.rows.back().mean;
        for (auto& row : t.rows)
        {
            row.residual = std::abs(row.mean - t.terminal);
        }
        out.push_back(std::move(t));
    }
    return out;
}

inline void print_report(std::ostream& os, std::vector<ReportTable> const& tables)
{
    for (auto const& t : tables)
    {
        os << t.experiment << "  model=" << t.model << "  domain=" << t.domain
           << "  terminal=" << format_number(t.terminal) << '\n';
        os << std::setw(10) << t.param_name << std::setw(22) << "mean" << std::setw(22)
           << "spread" << std::setw(22) << "residual" << '\n';
        for (auto const& r : t.rows)
        {
            os << std::setw(10) << r.param << std::setw(22) << std::setprecision(12) << r.mean
               << std::setw(22) << r.spread << std::setw(22) << r.residual << '\n';
        }
    }
}

}  // namespace thermolim
