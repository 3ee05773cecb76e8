"""TriMorph v2026 - Test Suite"""
