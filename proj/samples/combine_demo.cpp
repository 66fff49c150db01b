// End-to-end tour of the library: parse a theory from text, validate it,
// query a situation, and print the full derivation trace.

#include <iostream>
#include <string>

#include "pci/engine.hpp"
#include "pci/render.hpp"
#include "pci/text.hpp"

namespace {

const char* kTheory = R"(# Four Boolean ground features and a Boolean target.
feature a values { t, f }
feature b values { t, f }
feature c values { t, f }
feature d values { t, f }
feature g values { t, f }
target g

rule prior -> { t: 1/5, f: 4/5 }
rule r_a  { a = t } -> { t: 2/5, f: 3/5 }
rule r_ab { a = t, b = t } -> { t: 1/2, f: 1/2 }
rule r_ac { a = t, c = t } -> { t: 3/5, f: 2/5 }
rule r_cd { c = t, d = t } -> { t: 3/10, f: 7/10 }
)";

}  // namespace

int main() {
  pci::ParseResult parsed = pci::parse_theory(kTheory);
  if (!parsed.ok()) {
    for (const auto& d : parsed.diagnostics)
      std::cerr << d.span.line << ":" << d.span.col << ": " << d.message << "\n";
    return 1;
  }
  pci::Theory<pci::Rat> theory = pci::compile_theory(parsed.document);

  pci::ValidationReport report = theory.validate();
  std::cout << pci::render_validation_text(report) << "\n";

  pci::Schema situation = pci::parse_situation(theory.space(), "a=t, b=t, c=t, d=t");
  pci::Prediction<pci::Rat> prediction = pci::pci_predict(theory, situation);
  std::cout << pci::render_prediction_text(prediction, /*with_trace=*/true);
  return 0;
}
