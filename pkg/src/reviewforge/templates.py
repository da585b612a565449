"""Prompt templates for every LLM-backed pipeline stage.

Placeholders use ``{name}`` syntax; each template declares its variable
set so literal braces elsewhere in the text (JSON examples) survive
substitution untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import MissingVariable


@dataclass(frozen=True)
class Template:
    name: str
    system: str
    user: str
    variables: frozenset[str]

    def render(self, variables: dict[str, str]) -> tuple[str, str]:
        missing = self.variables - set(variables)
        if missing:
            raise MissingVariable(missing)
        system, user = self.system, self.user
        for var in self.variables:
            value = str(variables[var])
            system = system.replace("{" + var + "}", value)
            user = user.replace("{" + var + "}", value)
        return system, user


_REGISTRY: dict[str, Template] = {}


def _register(name: str, system: str, user: str) -> None:
    variables = frozenset(re.findall(r"\{([a-z_]+)\}", system + user))
    _REGISTRY[name] = Template(name=name, system=system, user=user, variables=variables)


def get_template(name: str) -> Template:
    if name not in _REGISTRY:
        raise KeyError(f"unknown template {name!r}")
    return _REGISTRY[name]


def template_names() -> list[str]:
    return sorted(_REGISTRY)


_register(
    "segment",
    system=(
        "You are a professional academic review text analysis assistant. Your task is to "
        "segment a complete \"Weaknesses & Questions\" section from an academic paper review "
        "into independent, specific points.\n\n"
        "You must follow these rules:\n"
        "1. Each point should be an independent, specific issue or weakness\n"
        "2. Preserve the core meaning of the original text without adding or removing information\n"
        "3. Maintain existing numbering structures if present (e.g., 1., 2., W1, W2, etc.)\n"
        "4. Handle various formatting styles including:\n"
        "   - Numbered lists (1., 2., 3.)\n"
        "   - Letter prefixes (W1, W2, Q1, Q2)\n"
        "   - Markdown bullet points (-, *, +)\n"
        "   - Section headers (## Weaknesses, ## Questions)\n"
        "5. If no clear numbering exists, logically segment based on content structure\n"
        "6. Each point should contain sufficient context to be understood independently\n"
        "7. Preserve the original language and terminology used by the reviewer\n"
    ),
    user=(
        "Please segment the following Weaknesses & Questions text into independent points:\n\n"
        "{weaknesses_and_questions_text}\n\n"
        "IMPORTANT: Regardless of the input format (bullet points, numbered lists, paragraphs, "
        "etc.), you MUST output in this exact format:\n\n"
        "Point 1: [Complete content of the first weakness point]\n"
        "Point 2: [Complete content of the second weakness point]\n"
        "Point 3: [Complete content of the third weakness point]\n"
        "...\n\n"
        "Rules:\n"
        "- Use exactly \"Point X:\" where X is a number starting from 1\n"
        "- Include ALL weakness points from the input, don't skip any\n"
        "- Each point should be complete and independently understandable\n"
        "- Preserve the original meaning and wording as much as possible\n"
        "- If the input has bullet points (-, *, +) or numbered lists (1., 2.), convert them to "
        "Point format\n"
        "- If the input has long paragraphs, break them into logical points\n"
    ),
)

_register(
    "map",
    system=(
        "You are a professional academic review analysis assistant. Your task is to perform "
        "precise one-to-one mapping between review weakness points and author rebuttal "
        "responses.\n\n"
        "Guidelines for mapping:\n"
        "1. Carefully analyze the rebuttal text to identify which sections respond to specific "
        "weaknesses\n"
        "2. Look for explicit references (W1, W2, Point 1, etc.) or implicit topical connections\n"
        "3. Extract the complete response content that addresses each weakness\n"
        "4. Assign confidence scores (0-1) based on the clarity and directness of the mapping\n"
        "5. Mark as \"No Response\" if a weakness is not addressed in the rebuttal\n"
        "6. Be conservative with confidence scores - only use high scores (>0.8) when the "
        "mapping is very clear\n"
        "7. Preserve the exact wording from the rebuttal when extracting responses\n\n"
        "CRITICAL RULE - NO SHORTCUTS OR REFERENCES:\n"
        "You must NEVER use summarizing phrases or references like \"[Same content as W2 "
        "response]\", \"[Similar to above]\", \"[As mentioned earlier]\", etc. Always copy the "
        "complete, verbatim text from the rebuttal for each weakness point, even if the same "
        "rebuttal section addresses multiple weaknesses. Repetition is required and expected - "
        "do not try to avoid it.\n"
    ),
    user=(
        "Please map each weakness point in <weakness_points> to its corresponding rebuttal "
        "response from <rebuttal_text>:\n\n"
        "<weakness_points>\n{weaknesses_list}\n</weakness_points>\n\n"
        "<rebuttal_text>\n{rebuttal_text}\n</rebuttal_text>\n\n"
        "MANDATORY REQUIREMENTS:\n"
        "- Output a mapping line for EVERY weakness point (W1, W2, W3, ...)\n"
        "- Use exactly \"W[number] -> R[number]:\" or \"W[number] -> No Response\" format\n"
        "- Include confidence score in parentheses for every mapping\n"
        "- Do not skip any weakness numbers\n"
        "- If you cannot find a rebuttal response, write \"No Response\" instead of omitting "
        "the line\n\n"
        "CRITICAL: You MUST provide a mapping for EVERY weakness point listed above. Do not "
        "skip any weakness points.\n"
        "ABSOLUTELY CRITICAL - NO SUMMARIZATION OR SHORTCUTS FOR REBUTTAL CONTENT:\n"
        "- ALWAYS copy the COMPLETE, FULL, VERBATIM text from the rebuttal for each weakness, "
        "even if content is identical to previous responses\n"
        "- NEVER use summarizing or abbreviated phrases like \"[Same content as W2 response]\" "
        "or \"[Similar to above]\" - always provide the complete original text\n"
        "- Do NOT abbreviate, summarize, or reference other responses\n"
        "- If the same rebuttal section addresses multiple weaknesses, copy the ENTIRE text in "
        "full for each relevant weakness\n"
        "- NEVER add any commentary, explanation, or meta-text beyond the actual rebuttal "
        "content\n\n"
        "<output_format> (use EXACTLY this format):\n"
        "W1 -> R1: [Specific rebuttal content addressing W1] (Confidence: 0.xx)\n"
        "W2 -> R2: [Specific rebuttal content addressing W2] (Confidence: 0.xx)\n"
        "W3 -> R3: [Specific rebuttal content addressing W3] (Confidence: 0.xx)\n"
        "...continue for ALL weakness points...\n\n"
        "If no rebuttal response exists for a weakness:\n"
        "Wx -> No Response (Confidence: 1.0)\n"
        "</output_format>\n"
    ),
)

_register(
    "perspective",
    system=(
        "You are an expert in academic paper review classification. Your task is to identify "
        "from which perspective the reviewer is raising concerns or questions about the paper.\n"
    ),
    user=(
        "The following review point is a weakness or question raised by a reviewer during peer "
        "review. Please classify this review point based on the PERSPECTIVE from which the "
        "reviewer is critiquing or questioning the paper:\n\n"
        "1. **Experiments**: The reviewer is questioning experimental **setup and design**. "
        "This includes missing or insufficient experiments, lack of ablation studies, weak "
        "baseline comparisons, unclear descriptions of datasets, or issues with hyperparameter "
        "selection.\n\n"
        "2. **Writing**: The reviewer is concerned about writing quality - grammar, clarity, "
        "readability, ambiguous phrasing, typos, missing definitions of symbols/terms, unclear "
        "explanations of concepts.\n\n"
        "3. **Presentation**: The reviewer is critiquing presentation and organization - "
        "figures, tables, and organization issues, unclear plots, missing legends, poor "
        "formatting, misplaced content, overall paper structure making it hard to follow.\n\n"
        "4. **Theory**: The reviewer is questioning theoretical aspects - incorrect "
        "mathematical derivations, flawed assumptions, weak theoretical justification, missing "
        "proofs, inconsistency between claims and formulas.\n\n"
        "5. **Novelty**: The reviewer is questioning novelty and originality - lack of novelty "
        "or originality, overlap with prior work, incremental contribution, insufficient "
        "differentiation from existing methods.\n\n"
        "6. **Reproducibility**: The reviewer is concerned about reproducibility - missing "
        "implementation details, absent code or pseudo-code, hyperparameters not specified, "
        "insufficient information to reproduce results.\n\n"
        "7. **Evaluation**: The reviewer is concerned about how the experimental results are "
        "**measured, analyzed, and interpreted**. This includes the use of inappropriate or "
        "missing evaluation metrics, insufficient analysis of results, or inconsistencies "
        "between reported results and the paper's claims.\n\n"
        "8. **Miscellaneous**: Content that is not a direct review point (weaknesses, "
        "questions, suggestions) about the paper. This includes polite remarks, Summative or "
        "transitional comments, summaries of the paper's or review's content, or irrelevant "
        "text.\n\n"
        "Please analyze the following review point and identify from which perspective the "
        "reviewer is raising their concern. Respond with ONLY the category name (Experiments, "
        "Writing, Presentation, Theory, Novelty, Reproducibility, Evaluation, Miscellaneous).\n\n"
        "Review point to classify:\n{weakness_content}\n\nPerspective:\n"
    ),
)

_register(
    "impact",
    system="You are a precise, deterministic classifier for rebuttal responses.\n",
    user=(
        "Return only a compact JSON object: {\"impact\": \"<one_of:[CRP,SRP,VCR,DWC,DRF]>\"}.\n"
        "Categories:\n"
        "- CRP: Concrete revision already made or concrete, verifiable artifact provided (new "
        "text/sections, new experiments/tables/figures, code/data links, numbers).\n"
        "  Cues: \"We added/updated...\", \"Section X rewritten...\", \"New ablation in Sec. "
        "... shows ...\", \"Code/data at ...\".\n"
        "- SRP: Specific revision plan committed, but not yet implemented; where/what to revise "
        "is specific.\n"
        "  Cues: \"We will add ablation in Sec. X...\", \"We will redraw Fig. ...\", \"We will "
        "clarify definitions in \u00a7...\".\n"
        "- VCR: Vague promise to revise; no concrete actions, locations, or artifacts.\n"
        "  Cues: \"We will revise accordingly.\", \"We will improve writing/clarity.\".\n"
        "- DWC: Defend current paper as-is; no new change proposed.\n"
        "  Cues: \"Already covered in Sec. ...\", \"Setup is standard\", \"Claim stands\".\n"
        "- DRF: Shift issue to reviewer or avoid underlying point; no change offered.\n"
        "  Cues: \"Reviewer misinterprets ...\", \"Out of scope ...\", \"Reviewer phrasing is "
        "incorrect\".\n\n"
        "Rebuttal response to classify:\n{rebuttal_span}\n"
    ),
)

_register(
    "restatement_check",
    system=(
        "You are a strict classifier. Decide whether a rebuttal span merely restates the "
        "reviewer's question without addressing it. Answer with exactly one word: yes or no.\n"
    ),
    user=(
        "Review segment:\n{segment_text}\n\nMatched rebuttal span:\n{rebuttal_span}\n\n"
        "Does the rebuttal span merely restate the question without addressing it? Answer yes "
        "or no.\n"
    ),
)

_register(
    "substance_check",
    system=(
        "You are a strict classifier. Decide whether a review segment raises a substantive "
        "issue or recommendation about the paper. Answer with exactly one word: yes or no.\n"
    ),
    user=(
        "Review segment:\n{segment_text}\n\n"
        "Does this segment raise a substantive issue or recommendation? Answer yes or no.\n"
    ),
)

_register(
    "judge_pointwise",
    system=(
        "You are an expert in evaluating peer review quality.\n"
        "Your task is to assess a peer review comment from multiple dimensions and provide "
        "scores (1-5) with detailed reasoning for each dimension.\n"
    ),
    user=(
        "Please evaluate the following peer review comment based on the scoring rubric "
        "provided.\n\n"
        "Scoring Rubric\n\n"
        "### Actionability (1-5)\n"
        "1. Very poor: No concrete next step. Vague remarks like \"improve experiments.\"\n"
        "2. Poor: A possible step is implied but not described. No criteria for success.\n"
        "3. Fair: At least one concrete suggestion, but incomplete or underspecified.\n"
        "4. Good: Clear, feasible steps with some parameters or success criteria.\n"
        "5. Excellent: A short plan with steps, locations in the paper, parameters or tests, "
        "and what outcome would address the issue.\n\n"
        "### Specificity (1-5)\n"
        "1. Very poor: Generic template text that could apply to any paper.\n"
        "2. Poor: Mentions broad areas but no details.\n"
        "3. Fair: Refers to a section, figure, dataset, or claim but stays broad.\n"
        "4. Good: Points to exact sections, figures, metrics, or settings.\n"
        "5. Excellent: Pinpoints precise passages or numbers and names exact variables, "
        "metrics, or ablation locations.\n\n"
        "### Groundedness (1-5)\n"
        "1. Very poor: Speculative, incorrect, or contradicted by the paper.\n"
        "2. Poor: Weak link to the paper; no verifiable reference.\n"
        "3. Fair: Partly grounded with at least one reference to paper content.\n"
        "4. Good: Well supported with references to specific content.\n"
        "5. Excellent: Strongly supported with exact identifiers or numbers from the paper.\n\n"
        "### Relevance (1-5)\n"
        "1. Very poor: Off topic relative to the target perspective or the main paper issues.\n"
        "2. Poor: Mostly off topic with minor relevant content.\n"
        "3. Fair: Partially aligned. Mixes relevant and irrelevant feedback.\n"
        "4. Good: Mostly aligned with the target perspective.\n"
        "5. Excellent: Fully aligned with the target perspective and the paper's main "
        "contributions.\n\n"
        "### Helpfulness (1-5)\n"
        "1. Very poor: Unclear, hostile, or not useful.\n"
        "2. Poor: Slightly useful but confusing or impractical.\n"
        "3. Fair: Some useful content, needs refinement to be actionable.\n"
        "4. Good: Clear, constructive, and practically useful.\n"
        "5. Excellent: Directly helps the authors improve the paper with minimal ambiguity.\n\n"
        "**Paper Content:**\n{paper_content}\n\n"
        "**Review Perspective:**\n{perspective}\n\n"
        "**Review Comment to Evaluate:**\n{review_text}\n\n"
        "Please provide scores (1-5) for each dimension along with your reasoning. Be critical "
        "and precise in your evaluation.\n\n"
        "You MUST respond with a valid JSON object in the following format (no markdown code "
        "blocks, just raw JSON):\n"
        "{\n"
        "    \"actionability_score\": <1-5>,\n"
        "    \"actionability_reasoning\": \"<brief explanation>\",\n"
        "    ......\n"
        "}\n"
    ),
)

_register(
    "judge_pairwise",
    system=(
        "You are an impartial judge comparing the actionability of two peer-review segments.\n"
        "Actionability means the feedback gives concrete, specific, and feasible guidance that "
        "authors can directly implement. Prefer segments that:\n"
        "-specify what to change (methods, experiments, analyses, writing),\n"
        "-localize where to change (section/figure/table/scope),\n"
        "-propose how to change (procedures, metrics, datasets, ablations, edits),\n"
        "-include verifiable artifacts or acceptance criteria (e.g., code/data, new "
        "experiments, numbers to report).\n"
        "Output JSON schema:{\n"
        "\"winner\": \"A\" | \"B\",\n"
        "\"justification\": \"1-2 sentences citing the most decisive actionable cues.\"\n"
        "}\n"
    ),
    user=(
        "Task: Choose the more actionable review segment for the specified perspective. "
        "Remember: no ties.\n"
        "Perspective:\n{perspective}\n"
        "Paper context:\n{paper_content}\n"
        "Segment A:\n{segment_a}\n"
        "Segment B:\n{segment_b}\n"
    ),
)

_register(
    "generate_segment",
    system=(
        "You are a professional reviewer. Provide a comment such as weakness, question or "
        "suggestion on the given paper in 1 to 3 sentences.\n"
    ),
    user=(
        "Request: From the perspective of {perspective}, provide a comment on the following "
        "paper.\n{paper_content}\n"
    ),
)
