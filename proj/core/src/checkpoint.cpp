#include "metabalance/nn/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "metabalance/errors.hpp"
#include "metabalance/serialize.hpp"

namespace metabalance::nn {

void save_checkpoint(std::ostream& out, const Mlp& model, const optim::Optimizer* optimizer) {
  const MlpSpec& s = model.spec();
  out << "metabalance-checkpoint " << kCheckpointVersion << '\n';
  out << "spec " << s.input_dim << ' ' << s.hidden_widths.size();
  for (auto w : s.hidden_widths) out << ' ' << w;
  out << ' ' << s.output_dim << ' ' << (s.dropout ? s.dropout->after_layer : 0) << ' '
      << format_hex(s.dropout ? s.dropout->probability : 0.0) << '\n';
  out << "parameters " << model.parameters().size() << '\n';
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    out << model.parameter_names()[i] << '\n';
    write_matrix(out, model.parameters()[i].value());
  }
  if (optimizer) {
    out << "optimizer-state\n";
    optimizer->save_state(out);
  } else {
    out << "optimizer none\n";
  }
}

Mlp load_checkpoint(std::istream& in, optim::Optimizer* optimizer) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "metabalance-checkpoint")
    throw DataError("checkpoint: missing header");
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));

  std::string tag;
  MlpSpec spec;
  std::size_t n_hidden = 0, dropout_layer = 0;
  std::string dropout_p;
  if (!(in >> tag >> spec.input_dim >> n_hidden) || tag != "spec")
    throw DataError("checkpoint: malformed spec line");
  spec.hidden_widths.resize(n_hidden);
  for (auto& w : spec.hidden_widths) in >> w;
  if (!(in >> spec.output_dim >> dropout_layer >> dropout_p))
    throw DataError("checkpoint: malformed spec line");
  if (dropout_layer > 0) spec.dropout = DropoutSpec{dropout_layer, parse_hex(dropout_p)};

  Mlp model = Mlp::build(spec, 0);
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "parameters" || count != model.parameters().size())
    throw DataError("checkpoint: parameter count does not match the architecture");
  std::vector<MatrixD> values;
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    in >> name;
    if (name != model.parameter_names()[i])
      throw DataError("checkpoint: expected parameter '" + model.parameter_names()[i] +
                      "', found '" + name + "'");
    values.push_back(read_matrix(in));
  }
  model.set_parameter_values(values);

  if (!(in >> tag)) throw DataError("checkpoint: missing optimizer section");
  if (tag == "optimizer-state") {
    if (optimizer) optimizer->load_state(in);
  } else {
    std::string none;
    in >> none;
  }
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const Mlp& model,
                     const optim::Optimizer* optimizer) {
  std::ofstream out(path);
  if (!out) throw DataError("checkpoint: cannot write " + path.string());
  save_checkpoint(out, model, optimizer);
}

Mlp load_checkpoint(const std::filesystem::path& path, optim::Optimizer* optimizer) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint: cannot read " + path.string());
  return load_checkpoint(in, optimizer);
}

}  // namespace metabalance::nn
