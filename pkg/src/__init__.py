"""
Ontology Lab - Laboratorio numerico di meccanica quantistica deterministica
"""

__version__ = '0.1.0'
