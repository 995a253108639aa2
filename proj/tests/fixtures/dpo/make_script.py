"""Writes mock_script.jsonl, the scripted provider replies for the DPO fixture paper."""
import json
import pathlib

E3 = r"\max_{\pi_{\theta}} \mathbb{E}_{x\sim \mathcal{D}, y\sim \pi_{\theta}(y \mid x)}\bigl[r_{\phi}(x, y)\bigr] - \beta\mathbb{D}_{\textrm{KL}}\bigl[\pi_{\theta}(y\mid x)\mid\mid \piref(y\mid x)\bigr]"
E4 = r"\pi_r(y\mid x) = \frac{1}{Z(x)}\piref(y\mid x)\exp\left(\frac{1}{\beta}r(x, y)\right)"
E5 = r"r(x,y) = \beta \log \frac{\pi_r(y\mid x)}{\piref(y\mid x)} + \beta \log Z(x)"
L1 = ("Under the Bradley-Terry preference framework, two reward functions from the same "
      "equivalence class induce the same preference distribution.")

Q4_GEMINI = (r"Given the RL objective in Formula (3): $$" + E3 + r"$$ how can we express the optimal solution "
             r"$\pi_r(y\mid x)$ to the KL-constrained reward maximization objective, where $Z (x)$ is the "
             r"partition function?")
Q4 = (r"Based on Formula (3): $$" + E3 + r"$$ which enforces a KL-constrained reward maximization, how can we "
      r"derive Formula (4): $$" + E4 + r"$$ where $Z (x)$ is the partition function ensuring $\pi_r$ is a valid "
      r"probability distribution?")
W4_BODY = (
    r"In Appendix A.1 the authors write: We optimize the following objective: "
    r"$$\max_{\pi} \mathbb{E}_{x\sim \mathcal{D}, y\sim \pi}\bigl[r(x, y)\bigr] - \beta\mathbb{D}_{\textrm{KL}}"
    r"\bigl[\pi(y|x)\mid\mid\piref(y|x)\bigr] = \min_{\pi} \mathbb{E}_{x\sim \mathcal{D}}\mathbb{E}_{y\sim \pi(y|x)}"
    r"\left[\log\frac{\pi(y|x)}{\frac{1}{Z(x)}\piref(y|x)\exp\left(\frac{1}{\beta}r(x, y)\right)} - \log Z(x)\right]$$"
    "\n"
    r"where $Z (x)$ is the partition function $$Z(x) = \sum_{y}\piref(y|x)\exp\left(\frac{1}{\beta}r(x, y)\right).$$"
    "\n"
    r"Since $Z(x)$ is not a function of $y$, the minimum is achieved by the policy that minimizes the first KL "
    r"term, and Gibbs' inequality gives the optimal solution $$" + E4 + r"$$ for all $x\in\mathcal{D}$."
)
W4 = W4_BODY + r" See also [31] for related results."

Q5_NUMBER_ONLY = "How can we derive Formula (5)?"
Q5 = (r"Given the optimal policy of Formula (4): $$" + E4 + r"$$ how can we derive Formula (5): $$" + E5 + r"$$?")
W5 = (r"Taking the logarithm of both sides of $$" + E4 + r"$$ (4) and rearranging terms, we obtain $$" + E5
      + r"$$ (5) as stated in Eq. 5 of the paper.")
W5_OVERFILTERED = r"Rearranging the terms of (4), we obtain $$" + E5 + r"$$ (5)"

Q6 = "How can we prove Lemma 1: " + L1 + " is true?"
W6 = (r"Two reward functions $r(x,y)$ and $r'(x,y)$ are equivalent iff $r'(x, y) - r(x, y) = f(x)$ for some "
      r"function $f$. For any prompt $x$ and completions $y_1, y_2$, "
      r"$$p_{r'}(y_1 \succ y_2 \mid x) = \frac{\exp(r(x,y_1) + f(x))}{\exp(r(x,y_1)+f(x)) + \exp(r(x,y_2)+f(x))}"
      r" = \frac{\exp(r(x,y_1))}{\exp(r(x,y_1)) + \exp(r(x,y_2))} = p_r(y_1 \succ y_2 \mid x),$$"
      r" so the two preference distributions coincide.")
EV6 = [
    {"text": r"Two reward functions $r(x, y)$ and $r'(x, y)$ are said to be equivalent iff "
             r"$r(x, y) - r'(x, y) = f(x)$ for some function $f$.", "locator": "Section 3, Definition 1"},
    {"text": r"The Bradley-Terry model stipulates that the preference distribution $p^*$ can be written as "
             r"$$p^*(y_1 \succ y_2 \mid x) = \frac{\exp\left(r^*(x, y_1)\right)}{\exp\left(r^*(x, y_1)\right) + "
             r"\exp\left(r^*(x, y_2)\right)}$$", "locator": "Section 2, Eq. (1)"},
]
Q6_REFINED = (r"Let $x$ be a prompt with completions $y_1, y_2$. Two reward functions $r(x,y)$ and $r'(x,y)$ are "
              r"equivalent if $r'(x,y) - r(x,y) = f(x)$ for some function $f$, and under the Bradley-Terry model "
              r"a reward $r$ induces the preference distribution "
              r"$$p_r(y_1 \succ y_2 \mid x) = \frac{\exp(r(x,y_1))}{\exp(r(x,y_1)) + \exp(r(x,y_2))}.$$ "
              + Q6)
W6_REFINED = W6 + " This argument follows the discussion in [31]."

Q3 = r"How can we derive the objective $$" + E3 + r"$$ used to fine-tune the language model with the learned reward?"

PROSE = "I am unable to identify a derivation or proof for this expression in the paper."


def entry(role, key, *, attempt=None, lines=None, text=None):
    e = {"role": role, "key": key}
    if attempt is not None:
        e["attempt"] = attempt
    if lines is not None:
        e["lines"] = lines
    if text is not None:
        e["text"] = text
    return e


def main():
    s = [
        entry("query_draft", "*", text=PROSE),
        # Formula (3): the retriever finds no derivation.
        entry("query_draft", "dpo:e3", lines=[{"formula": E3, "query": Q3}]),
        entry("answer_retriever", "dpo:e3:q1", lines=[{"formula": E3, "query": Q3, "whole_label": None}]),
        # Formula (4): the first draft omits the target formula.
        entry("query_draft", "dpo:e4", attempt=1, lines=[{"formula": E4, "query": Q4_GEMINI}]),
        entry("query_draft", "dpo:e4", attempt=2, lines=[{"formula": E4, "query": Q4}]),
        entry("answer_retriever", "dpo:e4:q1",
              text="```jsonl\n" + json.dumps({"formula": E4, "query": Q4, "whole_label": W4}) + "\n```\n"),
        entry("answer_filter", "dpo:e4:q1", lines=[{"answer": W4_BODY}]),
        # Formula (5): a number-only draft, then a filter that drops a cited equation.
        entry("query_draft", "dpo:e5", attempt=1, lines=[{"formula": E5, "query": Q5_NUMBER_ONLY}]),
        entry("query_draft", "dpo:e5", attempt=2, lines=[{"formula": E5, "query": Q5}]),
        entry("answer_retriever", "dpo:e5:q1", lines=[{"formula": E5, "query": Q5, "whole_label": W5}]),
        entry("answer_filter", "dpo:e5:q1", lines=[{"answer": W5_OVERFILTERED}]),
        # Lemma 1: context is collected and woven into the question.
        entry("query_draft", "dpo:e6", lines=[{"lemma": L1, "query": Q6}]),
        entry("answer_retriever", "dpo:e6:q1", lines=[{"lemma": L1, "query": Q6, "whole_label": W6}]),
        entry("context_collector", "dpo:e6:q1", attempt=1, text="The symbols are defined in Section 3."),
        entry("context_collector", "dpo:e6:q1", attempt=2, lines=[{"evidence": EV6}]),
        entry("question_refiner", "dpo:e6:q1", lines=[{"question": Q6_REFINED, "answer": W6_REFINED}]),
        entry("answer_filter", "dpo:e6:q1", lines=[{"answer": W6}]),
    ]
    out = pathlib.Path(__file__).with_name("mock_script.jsonl")
    out.write_text("".join(json.dumps(e) + "\n" for e in s))


if __name__ == "__main__":
    main()
