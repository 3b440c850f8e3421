#include "bpekit/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "bpekit/codec.hpp"
#include "bpekit/errors.hpp"
#include "json.hpp"

namespace bpekit {

using json = nlohmann::json;

BytesPerToken bytes_per_token(std::string_view text, const TokenizerModel& model,
                              bool parse_specials) {
  const auto ids = encode(text, model, {parse_specials});
  if (ids.empty()) throw Error(ErrorCode::kEmptyEncoding, "text encodes to no tokens");
  return {text.size(), ids.size()};
}

std::string Slice::key() const {
  std::string out;
  const auto add = [&](std::string_view k, const std::string& v) {
    if (!out.empty()) out += ',';
    out.append(k).append("=").append(v);
  };
  if (domain) add("domain", *domain);
  if (language) add("language", *language);
  if (reasoning) add("reasoning", *reasoning ? "true" : "false");
  return out;
}

void apply_slice_tag(Slice& slice, std::string_view tag) {
  const auto eq = tag.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorCode::kConfigInvalid, "slice tag must be key=value: " + std::string(tag));
  }
  const auto key = tag.substr(0, eq);
  const std::string value(tag.substr(eq + 1));
  if (key == "domain") {
    slice.domain = value;
  } else if (key == "language") {
    slice.language = value;
  } else if (key == "reasoning") {
    if (value == "true" || value == "1") slice.reasoning = true;
    else if (value == "false" || value == "0") slice.reasoning = false;
    else throw Error(ErrorCode::kConfigInvalid, "reasoning must be true or false");
  } else {
    throw Error(ErrorCode::kConfigInvalid, "unknown slice key " + std::string(key));
  }
}

Baselines baselines_from_json(std::string_view text) {
  Baselines out;
  try {
    const json doc = json::parse(text);
    for (const auto& [tokenizer, values] : doc.items()) {
      BaselineEntry entry;
      for (const auto& [key, value] : values.items()) {
        if (key == "vocab_size") {
          entry.vocab_size = value.get<std::uint64_t>();
        } else if (!key.empty() && key.front() == '_') {
          continue;  // annotations such as "_source"
        } else {
          entry.bytes_per_token.emplace(key, value.get<double>());
        }
      }
      out.emplace(tokenizer, std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("baselines: ") + e.what());
  }
  return out;
}

Baselines load_baselines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return baselines_from_json(buf.str());
}

double relative_gain(double a, double b) {
  if (!(b > 0.0)) throw Error(ErrorCode::kDivideByZero, "baseline value must be > 0");
  return a / b - 1.0;
}

std::string format_percent(double gain) {
  // Adding 0.0 turns a rounded -0 into +0.
  const double tenths = std::round(gain * 1000.0) + 0.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.1f%%", tenths / 10.0);
  return buf;
}

long rounded_percent(double gain) { return std::lround(gain * 100.0); }

BenchmarkReport run_benchmark(std::span<const SliceCorpus> corpora,
                              std::span<const NamedModel> models,
                              std::size_t sample_cap, const Baselines& baselines,
                              unsigned jobs) {
  if (sample_cap == 0) throw Error(ErrorCode::kConfigInvalid, "sample_cap must be >= 1");
  for (const auto& c : corpora) {
    if (c.documents.empty()) {
      throw Error(ErrorCode::kEmptyCorpus, "slice '" + c.slice.key() + "' has no documents");
    }
  }

  struct Task {
    const NamedModel* model;
    const SliceCorpus* corpus;
    BenchmarkRow row;
  };
  std::vector<Task> tasks;
  for (const auto& m : models) {
    for (const auto& c : corpora) tasks.push_back({&m, &c, {}});
  }

  const auto measure = [&](Task& task) {
    BenchmarkRow& row = task.row;
    row.tokenizer = task.model->name;
    row.slice = task.corpus->slice;
    const auto& docs = task.corpus->documents;
    const std::size_t n = std::min(sample_cap, docs.size());
    for (std::size_t i = 0; i < n; ++i) {
      row.bytes += docs[i].text.size();
      row.tokens += encode(docs[i].text, task.model->model.get(),
                           {docs[i].parse_specials})
                        .size();
    }
    row.documents = n;
  };

  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size())));
  if (jobs <= 1) {
    for (auto& t : tasks) measure(t);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (unsigned j = 0; j < jobs; ++j) {
      workers.emplace_back([&, j] {
        try {
          for (std::size_t i = j; i < tasks.size(); i += jobs) measure(tasks[i]);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  BenchmarkReport report;
  report.baselines = baselines;
  for (auto& t : tasks) {
    if (t.row.tokens == 0) {
      throw Error(ErrorCode::kEmptyCorpus,
                  "slice '" + t.row.slice.key() + "' encodes to no tokens");
    }
    report.rows.push_back(std::move(t.row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const BenchmarkRow& a, const BenchmarkRow& b) {
                     if (a.tokenizer != b.tokenizer) return a.tokenizer < b.tokenizer;
                     return a.slice.key() < b.slice.key();
                   });
  for (const auto& row : report.rows) {
    const std::string key = row.slice.key();
    for (const auto& [name, entry] : baselines) {
      const auto it = entry.bytes_per_token.find(key);
      if (it == entry.bytes_per_token.end()) continue;
      report.gains.push_back(
          {row.tokenizer, name, row.slice,
           relative_gain(row.bytes_per_token().value(), it->second)});
    }
  }
  return report;
}

namespace {

std::string decimal(const BytesPerToken& bpt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", bpt.value());
  return buf;
}

json slice_json(const Slice& s) {
  json out = json::object();
  out["domain"] = s.domain ? json(*s.domain) : json(nullptr);
  out["language"] = s.language ? json(*s.language) : json(nullptr);
  out["reasoning"] = s.reasoning ? json(*s.reasoning) : json(nullptr);
  return out;
}

Slice slice_from(const json& j) {
  Slice s;
  if (!j.at("domain").is_null()) s.domain = j["domain"].get<std::string>();
  if (!j.at("language").is_null()) s.language = j["language"].get<std::string>();
  if (!j.at("reasoning").is_null()) s.reasoning = j["reasoning"].get<bool>();
  return s;
}

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (const char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string emit_report(const BenchmarkReport& report, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    std::string out =
        "tokenizer,domain,language,reasoning,documents,bytes,tokens,bytes_per_token\n";
    for (const auto& r : report.rows) {
      out += csv_field(r.tokenizer) + ',' + csv_field(r.slice.domain.value_or("")) + ',' +
             csv_field(r.slice.language.value_or("")) + ',' +
             (r.slice.reasoning ? (*r.slice.reasoning ? "true" : "false") : "") + ',' +
             std::to_string(r.documents) + ',' + std::to_string(r.bytes) + ',' +
             std::to_string(r.tokens) + ',' + decimal(r.bytes_per_token()) + '\n';
    }
    return out;
  }

  json rows = json::array();
  for (const auto& r : report.rows) {
    json row = json::object();
    row["tokenizer"] = r.tokenizer;
    row["slice"] = slice_json(r.slice);
    row["documents"] = r.documents;
    row["bytes"] = r.bytes;
    row["tokens"] = r.tokens;
    row["bytes_per_token"] = r.bytes_per_token().value();
    rows.push_back(std::move(row));
  }
  json baselines = json::object();
  for (const auto& [name, entry] : report.baselines) {
    json e = json::object();
    for (const auto& [key, value] : entry.bytes_per_token) e[key] = value;
    if (entry.vocab_size) e["vocab_size"] = *entry.vocab_size;
    baselines[name] = std::move(e);
  }
  json gains = json::array();
  for (const auto& g : report.gains) {
    json row = json::object();
    row["tokenizer"] = g.tokenizer;
    row["baseline"] = g.baseline;
    row["slice"] = slice_json(g.slice);
    row["relative_gain"] = g.relative_gain;
    row["relative_gain_pct"] = format_percent(g.relative_gain);
    gains.push_back(std::move(row));
  }
  json doc = json::object();
  doc["rows"] = std::move(rows);
  doc["baselines"] = std::move(baselines);
  doc["gains"] = std::move(gains);
  return doc.dump(2) + "\n";
}

void write_report(const BenchmarkReport& report, ReportFormat format,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << emit_report(report, format);
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

BenchmarkReport report_from_json(std::string_view text) {
  BenchmarkReport report;
  try {
    const json doc = json::parse(text);
    for (const auto& r : doc.at("rows")) {
      BenchmarkRow row;
      row.tokenizer = r.at("tokenizer").get<std::string>();
      row.slice = slice_from(r.at("slice"));
      row.documents = r.at("documents").get<std::uint64_t>();
      row.bytes = r.at("bytes").get<std::uint64_t>();
      row.tokens = r.at("tokens").get<std::uint64_t>();
      if (row.tokens == 0 || row.documents == 0) {
        throw Error(ErrorCode::kSchemaError, "rows need documents > 0 and tokens > 0");
      }
      report.rows.push_back(std::move(row));
    }
    report.baselines = baselines_from_json(doc.at("baselines").dump());
    for (const auto& g : doc.at("gains")) {
      report.gains.push_back({g.at("tokenizer").get<std::string>(),
                              g.at("baseline").get<std::string>(), slice_from(g.at("slice")),
                              g.at("relative_gain").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("report: ") + e.what());
  }
  return report;
}

}  // namespace bpekit
