"""Prompt templates for every agent in the pipeline.

Templates are kept as plain functions so the exact text lives in one place
and golden tests can pin it byte for byte.
"""

from __future__ import annotations

from textwrap import dedent
from typing import Iterable


def file_reader_prompt(file_path: str, max_chars: int, details: bool = False) -> str:
    rows_line = (
        "- Count total rows and provide basic statistics"
        if details
        else "- No additional info needed."
    )
    other_line = (
        "6. For other files, provide appropriate summary"
        if details
        else "6. For binary or other files, provide only file size."
    )
    return f"""Generate Python code to read and analyze the file: "{file_path}"

Your code should:
1. Import all modules used (e.g. import os).
2. Use appropriate libraries based on file type (pandas for tabular data, etc.)
3. For tabular files (csv, excel, parquet, etc.):
   - Display column names. If there are more than 20 columns, only display the first and last 10.
   - Show first 2-3 rows with truncated cell content
   - Do not show additional index column if it's not in the original table
   - If failed to open the file, treat it as text file
   {rows_line}
4. For text files:
   - Display first few lines (up to {max_chars} characters)
5. For compressed tabular or text files, show its decompressed content as described.
{other_line}
7. Keep the total output under {max_chars} characters

Return ONLY the Python code, no explanations or markdown. The code should be self-contained and executable on its own."""


def description_files_prompt(data_prompt: str) -> str:
    return f"""Given this data prompt:

{data_prompt}

Please identify any files that appear to contain project descriptions, requirements, or task definitions.
Look for files like README, documentation files, or task description files.

Format your response as follows:
Description Files: [list ONLY the absolute path, one per line]
Explanation: [explain why these files were identified as description files]"""


def task_description_prompt(data_prompt: str, description_analysis: str, description_context: str) -> str:
    return f"""Based on this data prompt and description files:

Data Prompt:
(IMPORTANT: The metadata of example files in Data Prompt may not be representative - do not make assumptions about data statistics based on examples.)

{data_prompt}

Description File Analysis:
{description_analysis}

Description File Contents:
{description_context}

Based ONLY on the information explicitly stated in the provided data prompt, description files, and analysis, provide a condensed description of the data science task. Include only details that are directly mentioned in the source materials.
Do not add assumptions or infer unstated information.
"""


def format_tools_info(tools: Iterable) -> str:
    blocks = []
    for tool in tools:
        lines = [
            f"Tool: {tool.name}",
            f"Version: {tool.version}",
            f"Description: {tool.description}",
        ]
        if tool.features:
            lines.append("Special features/limitations:")
            lines.extend(f"- {feature}" for feature in tool.features)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def tool_selection_prompt(data_prompt: str, description: str, tools: Iterable) -> str:
    return f"""Given the following data science task:

Data Description:
{data_prompt}

Task Analysis:
{description}

Available tools and their capabilities:

{format_tools_info(tools)}

Please select the most appropriate tool for this task. Consider:
1. The nature of the data (tabular, time series, multimodal, etc.)
2. The specific requirements of the task
3. Any limitations or special features of each tool

Format your response as follows:
Selected Tool: [tool name ONLY]
Explanation: [detailed explanation of why this tool is the best choice, including specific features that match the task requirements]"""


CONTINUATION_PREAMBLE = "This is a continuation of the previous chunk. "


def condense_prompt(chunk: str, index: int, total: int) -> str:
    context = CONTINUATION_PREAMBLE if index > 0 else ""
    return f"""{context}Condense this portion of the tutorial while preserving essential implementation details, code samples, and key concepts.
Focus on:

1. Implementation details and techniques
2. Code snippets with necessary context
3. Critical configurations and parameters
4. Important warnings and best practices

Chunk {index + 1}/{total}:
{chunk}

Provide the condensed content in markdown format."""


def summarize_prompt(condensed_content: str) -> str:
    return f"""Generate a concise summary (within 100 words) of this tutorial that helps a code generation LLM understand:
1. What specific implementation knowledge or techniques it can find in this tutorial
2. What coding tasks this tutorial can help with
3. Key features or functionalities covered

Tutorial content:
{condensed_content}

Provide the summary in a single paragraph starting with "Summary: "."""


def summary_repair_prompt(condensed_content: str, previous: str) -> str:
    return (
        summarize_prompt(condensed_content)
        + "\n\nYour previous answer did not follow the required format:\n"
        + previous
        + '\n\nReply with one paragraph of at most 100 words that starts with "Summary: ".'
    )


def retrieval_prompt(
    task_prompt: str,
    data_prompt: str,
    user_prompt: str,
    error_prompt: str,
    tutorials_info: str,
    max_num_tutorials: int,
) -> str:
    context = f"""Task: {task_prompt}
Data: {data_prompt}
User Question: {user_prompt}
Previous Error: {error_prompt}"""
    return f"""Given the following context and list of tutorials with their summaries, select the {max_num_tutorials} most relevant tutorials for helping with this task. Consider how well each tutorial's title and summary match the task, data, user question, and any errors.

Context:
{context}

Available Tutorials:
{tutorials_info}

IMPORTANT: Respond ONLY with the numbers of the selected tutorials (up to {max_num_tutorials}) separated by commas.
For example: "1,3,4" or "2,5" or just "1" if only one is relevant.
DO NOT include any other text, explanation, or formatting in your response."""


def error_analysis_prompt(
    task_prompt: str,
    data_prompt: str,
    user_prompt: str,
    python_code: str,
    bash_script: str,
    retrieved_tutorials: str,
    error_message: str,
) -> str:
    return f"""{task_prompt}
{data_prompt}
{user_prompt}
Previous Python Code:
{python_code}
Previous Bash Script to Execute the Python Code:
{bash_script}
{retrieved_tutorials}
Error Message:
{error_message}
Analyze the error message and context provided. Your response MUST contain exactly two short paragraphs as follows:

ERROR SUMMARY: Provide a brief, technical description of the error in 1-3 sentences. Focus only on identifying the root cause and affected component without background explanations.

SUGGESTED FIX: Offer specific debugging directions in 1-3 sentences. Do not include actual code or commands, only tactical debugging guidance.

Each paragraph must be concise (maximum 3 sentences). Do not include general advice, explanations beyond the direct debugging strategy, or any additional paragraphs."""


FORMAT_REMINDER = "\n\nYour previous response could not be parsed. Answer again using exactly the requested labels."


def coder_prompt(
    tool_name: str,
    output_folder: str,
    tool_prompt: str,
    task_description: str,
    data_prompt: str,
    user_input: str,
    error_block: str,
    retrieved_block: str,
) -> str:
    return f"""As an AutoML Agent, you will be given a folder containing data and description files. Please generate Python code using {tool_name} to train a predictor and make predictions on test data. Follow these specifications:

ONLY save files to the working directory: {output_folder}.

1. Data preprocessing:
   - Remove training data samples without valid labels (unless told not to do so).
   - Remove the unneccesary index column (if applicable)

2. Model training:
   - Use {tool_name} with appropriate parameters for the task
   - If a model is trained, save it in a folder with random timestamp within {output_folder}

3. Prediction:
   - Make predictions on the test data
   - Save the predicted results to {output_folder}, result file name should be "results", the format and extension should be same as the test data file
   - Output column names must exactly match those in the training or sample submission files without adding "predicted_" prefixes or creating any new columns.

4. Documentation:
   - Add a brief docstring at the beginning of the script explaining its purpose and usage
   - Also include additional installation steps with comments at the beginning of the script
   - Include comments explaining any complex operations or design decisions

5. Others:
   - To avoid DDP errors, wrap the code in: if __name__ == "__main__":
   - Ensure errors are propagated up and not silently caught - do not use try/except blocks unless you explicitly reraise the exception.

{tool_prompt}

Please provide the complete Python script that accomplishes these tasks, ensuring it's ready to run given the appropriate data inputs.

Task Description: {task_description}

{data_prompt}

{user_input}

{error_block}

{retrieved_block}
"""


def feedback_turn(error_text: str, retrieved_block: str) -> str:
    """Follow-up user turn for the multi-turn coder session."""
    parts = [
        "The previous script did not complete the task. Execution feedback:",
        error_text,
        "Please provide the complete corrected Python script.",
    ]
    if retrieved_block:
        parts.append(retrieved_block)
    return "\n\n".join(parts)


def shell_prompt(
    python_file_path: str,
    output_folder: str,
    create_venv: bool,
    install_packages: bool,
    current_python: str | None,
    error_message: str | None,
    previous_bash: str | None,
    previous_python: str | None,
) -> str:
    instructions = []
    if create_venv:
        instructions.extend(
            [
                f"Create and configure a conda environment in {output_folder}:",
                "- Python version: 3.11",
                "- Activate the environment",
                "- Install required packages",
            ]
        )
    elif install_packages:
        instructions.append(
            "The environment may not be fully configured. Install any packages required in the python code."
        )
    else:
        instructions.append(
            "The environment is already configured. Do not install or update any package."
        )

    instructions.append(f"Execute the Python script: {python_file_path}")

    prompt_parts = [
        "Generate a minimal bash script that will:",
        "\n".join(f"{i+1}. {instr}" for i, instr in enumerate(instructions)),
    ]

    if current_python:
        prompt_parts.append(
            dedent(
                f"""
            Current Python code:
            ```python
            {current_python}
            ```
        """
            ).strip()
        )

    if error_message:
        prompt_parts.append(f"Previous error:\n{error_message}")

    if previous_bash and error_message:
        prompt_parts.append(
            dedent(
                f"""
            Previous failed bash script:
            ```bash
            {previous_bash}
            ```
        """
            ).strip()
        )

    if previous_python and error_message:
        prompt_parts.append(
            dedent(
                f"""
            Previous Python code:
            ```python
            {previous_python}
            ```
        """
            ).strip()
        )

    prompt_parts.append(
        dedent(
            """
        Notes:
        - Generate a minimal, executable bash script
        - Focus on essential commands only
        - Handle common environment and package only if there were errors
    """
        ).strip()
    )

    return "\n\n".join(prompt_parts)


def executer_prompt(task_prompt: str, data_prompt: str, python_code: str, stdout: str, stderr: str) -> str:
    return f"""You are an expert code evaluator. Analyze the execution results of the following Python code and determine if the execution was successful or if issues need to be fixed.

{task_prompt}{data_prompt}

## Python Code
```python
{python_code}
```

## Execution Results
### Standard Output (stdout)
```
{stdout or "No standard output"}
```

### Standard Error (stderr)
```
{stderr or "No standard error"}
```

Evaluate the execution results and decide on one of the following actions:
1. FINISH - If the execution was completely successful and met all requirements.
2. FIX - If there were errors, issues, or performance problems that need to be addressed.

Provide your decision in the following format:
DECISION: [FINISH or FIX]
ANALYSIS: [Brief analysis of errors if any, or "None" if no errors]

The error analysis should be brief but informative enough for another agent to understand what needs to be fixed.

Even if the code executed without throwing errors, it might still have issues with logic or not meet all requirements."""
