"""TriMorph v2026 - Source Package"""
