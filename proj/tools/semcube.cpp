#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "semcube/api.hpp"
#include "semcube/error.hpp"
#include "server.hpp"

using namespace semcube;
using nlohmann::json;

namespace {

// "Dimension.level"; the dimension id itself may contain dots.
std::pair<std::string, std::size_t> parse_layer_ref(const std::string& s) {
  auto dot = s.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == s.size()) {
    throw Error(ErrorCode::invalid_input, "layer must look like <dimension>.<category>", s);
  }
  try {
    std::size_t used = 0;
    auto level = std::stoul(s.substr(dot + 1), &used);
    if (used != s.size() - dot - 1) throw std::invalid_argument(s);
    return {s.substr(0, dot), level};
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::invalid_input, "category must be a number", s);
  }
}

const schema::Category& category_of(const engine::Snapshot& snap, const std::string& ref) {
  auto [dim, level] = parse_layer_ref(ref);
  const auto& d = snap.index->dimension(dim);
  if (level >= d.categories.size()) throw Error(ErrorCode::unknown_id, "no such category", ref);
  return d.categories[level];
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write output", path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semcube: semantic cube indexing and conceptual map service"};
  app.require_subcommand(1);

  std::string config_path;
  auto* ingest = app.add_subcommand("ingest", "build the index snapshot from taxonomy and corpus");
  ingest->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);

  int port = 0;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "serve the HTTP API over an existing snapshot");
  serve->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port, "listen port (overrides config)");
  serve->add_option("--host", host, "listen address");

  std::vector<std::string> layer_refs;
  std::string query, measure, out_path, contingency;
  std::optional<double> delta;
  auto* map_cmd = app.add_subcommand("map", "build one map without the service and print its JSON");
  map_cmd->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  map_cmd->add_option("--layers", layer_refs, "comma-separated <dimension>.<category> list")
      ->required()
      ->delimiter(',');
  map_cmd->add_option("--query", query, "free-text query marked over the balls");
  map_cmd->add_option("--measure", measure, "interest_factor|log_likelihood_ratio|mutual_information|f1");
  map_cmd->add_option("--delta", delta, "bridge threshold");
  map_cmd->add_option("--out", out_path, "output file (default stdout)");

  std::string from_ref, to_ref;
  auto* cube_cmd = app.add_subcommand("cube", "export the contingency cells of two categories as TSV");
  cube_cmd->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  cube_cmd->add_option("--from", from_ref, "<dimension>.<category>")->required();
  cube_cmd->add_option("--to", to_ref, "<dimension>.<category>")->required();
  cube_cmd->add_option("--measure", measure, "score column measure");
  cube_cmd->add_option("--contingency", contingency, "standard|paper-literal");
  cube_cmd->add_option("--out", out_path, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = engine::load_config(config_path);

    if (*ingest) {
      auto s = engine::ingest(config);
      std::cout << "documents " << s.documents << "\nconcepts " << s.concepts << "\ndropped_cuis " << s.dropped_cuis
                << "\nflagged " << s.flagged.size() << "\n";
      for (const auto& id : s.flagged) std::cout << "  " << id << "\n";
      return 0;
    }

    auto snap = engine::load_snapshot(config.index);

    if (*serve) {
      api::Api api(snap, config);
      return tools::serve(api, host, port ? port : config.port);
    }

    if (*map_cmd) {
      json body = {{"layers", json::array()}};
      for (const auto& ref : layer_refs) {
        auto [dim, level] = parse_layer_ref(ref);
        body["layers"].push_back({{"dimension", dim}, {"category", level}});
      }
      if (!query.empty()) body["query"] = query;
      if (!measure.empty()) body["measure"] = measure;
      if (delta) body["delta"] = *delta;
      map::MapSettings defaults;
      defaults.measure = config.measure;
      defaults.delta = config.delta;
      defaults.contingency = config.contingency;
      defaults.scorer = config.scorer;
      auto m = api::map_from_request(*snap.index, body, "m1", defaults);
      write_output(out_path, api::map_to_json(*snap.index, m).dump(2) + "\n");
      return 0;
    }

    if (*cube_cmd) {
      auto c = cube::build_cube(*snap.index, category_of(snap, from_ref), category_of(snap, to_ref));
      auto m = measure.empty() ? config.measure : cube::parse_measure(measure);
      auto mode = contingency.empty() ? config.contingency : cube::parse_contingency(contingency);
      std::ostringstream out;
      cube::write_cube_tsv(out, c, m, mode);
      write_output(out_path, out.str());
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::io ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
