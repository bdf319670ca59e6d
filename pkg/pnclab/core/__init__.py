"""PNC lab core package."""
