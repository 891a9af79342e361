# Parsing, formatting and timing helpers
