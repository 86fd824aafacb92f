#pragma once

// Prompt templates. The built-in "math" and "code" templates match the
// shipped files under templates/ — plain text with {problems} and
// {answer_lines} slots filled at render time.

#include <stdexcept>
#include <string>

#include "chainbench/composer.hpp"
#include "chainbench/util.hpp"

namespace chainbench {

struct UnknownTemplate : std::runtime_error {
    explicit UnknownTemplate(const std::string& id)
        : std::runtime_error("unknown prompt template: " + id) {}
};

struct PromptTemplate {
    std::string id;
    std::string text;
    bool number_problems = true;  // "Problem K:" labels plus constraint sentences
};

inline const char* kMathTemplateText =
    "{problems}\n"
    "\n"
    "Note: In this problem set:\n"
    "- [variablek] represents the calculated variable needed to solve problem k.\n"
    "- [answerk] represents the answer to problem k.\n"
    "\n"
    "Solve all problems step by step and provide the answers for all problems in "
    "the following format:\n"
    "\n"
    "### Final Answers\n"
    "\n"
    "{answer_lines}\n";

inline const char* kCodeTemplateText =
    "### Question:\n"
    "{problems}\n"
    "Solve all problems step by step and provide the code for all problems. For "
    "each problem, read the inputs from stdin solve the problem and write the "
    "answer to stdout (do not directly test on the sample inputs). Enclose your "
    "code within delimiters in the following format:\n"
    "```python\n"
    "# YOUR CODE HERE\n"
    "```\n"
    "### Answer: (use the provided format with backticks)\n";

inline PromptTemplate get_template(const std::string& id) {
    if (id == "math") return {"math", kMathTemplateText, true};
    if (id == "code") return {"code", kCodeTemplateText, false};
    if (file_exists(id)) return {id, read_file(id), true};
    throw UnknownTemplate(id);
}

namespace detail {

inline std::string replace_slot(std::string text, const std::string& slot,
                                const std::string& value) {
    std::size_t pos;
    while ((pos = text.find(slot)) != std::string::npos)
        text.replace(pos, slot.size(), value);
    return text;
}

}  // namespace detail

inline std::string render_prompt(const ComposedProblem& cp,
                                 const PromptTemplate& tmpl) {
    std::string problems;
    for (std::size_t i = 0; i < cp.sub_problems.size(); ++i) {
        if (i > 0) problems += "\n\n";
        const SubProblem& sp = cp.sub_problems[i];
        if (tmpl.number_problems) {
            problems += "Problem " + std::to_string(i + 1) + ": ";
            // Constraint sentence comes first inside the numbered block.
            for (const DependencySpec& d : cp.dependencies) {
                if (d.chain_index == static_cast<int>(i) + 1) {
                    problems += render_constraint_sentence(d) + " ";
                    break;
                }
            }
        }
        problems += sp.modified_question;
    }

    std::string answer_lines;
    for (std::size_t i = 0; i < cp.sub_problems.size(); ++i) {
        if (i > 0) answer_lines += "\n";
        answer_lines += "Problem " + std::to_string(i + 1) + ": \\boxed{" +
                        answer_ref(static_cast<int>(i) + 1) + "}";
    }

    std::string out = detail::replace_slot(tmpl.text, "{problems}", problems);
    out = detail::replace_slot(out, "{answer_lines}", answer_lines);
    out = detail::replace_slot(out, "{n}", std::to_string(cp.sub_problems.size()));
    return out;
}

inline std::string render_prompt(const ComposedProblem& cp,
                                 const std::string& template_id) {
    return render_prompt(cp, get_template(template_id));
}

}  // namespace chainbench
